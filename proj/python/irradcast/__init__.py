"""Solar irradiance nowcasting with recurrent networks on SURFRAD data."""

from ._irradcast import (
    ChecksumError,
    ConfigError,
    Dataset,
    DateError,
    Forecaster,
    InsufficientData,
    IrradcastError,
    ParseError,
    SchemaError,
    ShapeError,
    StationMeta,
    VersionError,
    bird_clear_sky,
    compute_kt,
    gradcheck,
    kt_to_ghi,
    parse_daily_file,
    persistence_baseline,
    prepare_dataset,
    rmse,
    solar_position,
    synthetic_daily_file,
    total_irradiance,
    train,
)

__all__ = [
    "ChecksumError",
    "ConfigError",
    "Dataset",
    "DateError",
    "Forecaster",
    "InsufficientData",
    "IrradcastError",
    "ParseError",
    "SchemaError",
    "ShapeError",
    "StationMeta",
    "VersionError",
    "bird_clear_sky",
    "compute_kt",
    "gradcheck",
    "kt_to_ghi",
    "parse_daily_file",
    "persistence_baseline",
    "prepare_dataset",
    "rmse",
    "solar_position",
    "synthetic_daily_file",
    "total_irradiance",
    "train",
]
