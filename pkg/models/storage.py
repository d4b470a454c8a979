"""File storage for datasets, pools, states, reports and CSV tables."""

from pathlib import Path
from typing import Type, TypeVar

import pandas as pd
from loguru import logger
from pydantic import BaseModel, ValidationError

from config.settings import settings
from models.schemas import DatasetFile, ExperimentSpec, PoolFile, StateFile
from utils.exceptions import DatasetError

ModelT = TypeVar("ModelT", bound=BaseModel)


class FileStore:
    """Reads and writes pipeline files."""

    @classmethod
    def load(cls, path: Path, model: Type[ModelT]) -> ModelT:
        """Read and validate a JSON file, raising DatasetError on any problem."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise DatasetError(f"cannot read {path}: {e}") from e
        try:
            return model.model_validate_json(text)
        except ValidationError as e:
            raise DatasetError(f"{path} is not a valid {model.__name__}: {e}") from e

    @classmethod
    def save(cls, path: Path, record: BaseModel) -> Path:
        """Write a model as indented JSON."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.debug(f"Wrote {path}")
        return path

    @classmethod
    def load_dataset(cls, path: Path) -> DatasetFile:
        return cls.load(path, DatasetFile)

    @classmethod
    def load_spec(cls, path: Path) -> ExperimentSpec:
        return cls.load(path, ExperimentSpec)

    @classmethod
    def load_pool(cls, path: Path) -> PoolFile:
        return cls.load(path, PoolFile)

    @classmethod
    def load_state(cls, path: Path) -> StateFile:
        return cls.load(path, StateFile)

    @classmethod
    def save_csv(cls, path: Path, frame: pd.DataFrame) -> Path:
        """Write a table with fixed float formatting so reruns are byte-identical."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"Wrote {path}")
        return path
