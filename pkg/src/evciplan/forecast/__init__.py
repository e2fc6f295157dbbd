"""ARIMA modelling of the hourly EVCI price."""
from .arima import (
    ArimaModel,
    OrderSelection,
    fit,
    fitted,
    forecast,
    residual_normality,
    residuals,
    rolling_forecast,
    select_order,
)
from .diagnostics import (
    AdfResult,
    ForecastError,
    ForecastScores,
    NormalityResult,
    acf,
    adf_critical_5pct,
    adf_test,
    difference,
    integrate,
    jarque_bera,
    pacf,
    score,
)
