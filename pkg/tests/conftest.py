from datetime import date, timedelta

import numpy as np
import pytest

from mkteff import AlignedPanel, PriceSeries


def make_dates(T, start=date(2020, 1, 1)):
    return tuple(start + timedelta(days=t) for t in range(T))


def make_panel(values, kind="returns", asset_ids=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 1 and values.shape[1] > values.shape[0]:
        values = values.T
    n = values.shape[1]
    ids = tuple(asset_ids) if asset_ids else tuple(f"A{i}" for i in range(n))
    return AlignedPanel(make_dates(values.shape[0]), values, ids, kind)


def make_series(asset_id, dates, prices):
    return PriceSeries(asset_id=asset_id, dates=tuple(dates), prices=np.asarray(prices, float))


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
