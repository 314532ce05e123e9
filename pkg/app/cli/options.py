from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from app.core.config import output_root, settings
from app.core.errors import ConfigError, InvalidInput
from app.core.error_reporting import to_jsonable
from app.models.experiment import ExperimentConfig
from app.models.matrices import GramPairModel, NormPairModel
from app.services.hermitian.pairs import HermitianPair
from app.services.norms.oracles import NormOracle

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def _validation_details(exc: ValidationError) -> list[dict[str, Any]]:
    return [
        {"loc": [str(x) for x in err["loc"]], "msg": err["msg"]} for err in exc.errors()
    ]


def read_json_file(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InvalidInput("Input file not found.", details={"path": str(path)}) from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(
            "Input file is not valid JSON.", details={"path": str(path), "line": exc.lineno}
        ) from exc


def read_model(path: str | Path, model: type[ModelT]) -> ModelT:
    data = read_json_file(path)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise InvalidInput(
            "Input does not match the expected schema.",
            details={"path": str(path), "errors": _validation_details(exc)},
        ) from exc


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) with the global flags applied on top."""
    data = read_json_file(args.config) if args.config else {}
    try:
        config = ExperimentConfig.model_validate(data)
        return config.with_overrides(
            out_dir=args.out,
            seed=args.seed,
            order=args.order,
            norm=args.norm,
            n_max=args.n_max,
        )
    except ValidationError as exc:
        raise ConfigError(
            "Invalid experiment config.", details={"errors": _validation_details(exc)}
        ) from exc


def output_dir(args: argparse.Namespace) -> Path:
    path = Path(args.out) if args.out else output_root()
    path.mkdir(parents=True, exist_ok=True)
    return path


def seeded_rng(args: argparse.Namespace) -> np.random.Generator:
    return np.random.default_rng(settings.DEFAULT_SEED if args.seed is None else args.seed)


def emit(payload: dict[str, Any]) -> None:
    """One JSON summary line on stdout."""
    print(json.dumps(to_jsonable(payload), sort_keys=True))


def input_error(exc: ValueError, path: str | Path) -> InvalidInput:
    """Map a reader's UPPER_SNAKE code to the CLI error."""
    return InvalidInput(
        "Input file could not be parsed.", details={"path": str(path), "code": str(exc)}
    )


def read_norm_input(path: str | Path) -> HermitianPair | tuple[NormOracle, NormOracle]:
    """A Gram pair, or two functional families when φ carries `functionals`."""
    data = read_json_file(path)
    phi = data.get("phi") if isinstance(data, dict) else None
    model: type[GramPairModel] | type[NormPairModel] = (
        NormPairModel if isinstance(phi, dict) and "functionals" in phi else GramPairModel
    )
    try:
        parsed = model.model_validate(data)
    except ValidationError as exc:
        raise InvalidInput(
            "Input does not match the expected schema.",
            details={"path": str(path), "errors": _validation_details(exc)},
        ) from exc
    if isinstance(parsed, GramPairModel):
        return parsed.to_pair()
    return parsed.phi.to_oracle(), parsed.psi.to_oracle()
