"""Deterministic OHLC CSV fixtures."""

from datetime import datetime, timedelta

PLANTED = (3, 17, 25, 40, 41, 58, 66, 79, 88, 97)
START = datetime(2018, 1, 19)


def _row(minute, o, h, l, c):
    ts = (START + timedelta(minutes=minute)).isoformat()
    return f"{ts},{o!r},{h!r},{l!r},{c!r}"


def planted_csv(n=100, planted=PLANTED, price=1.0):
    """Small ranges everywhere except ``planted`` bars, which have the ten largest."""
    rows = ["timestamp,open,high,low,close"]
    small = 0
    big = 0
    for i in range(n):
        if i in planted:
            pct = 1.0 + 0.1 * big
            big += 1
        else:
            pct = 0.01 + 0.001 * small
            small += 1
        rows.append(_row(i, price, price * (1 + pct / 100), price, price))
    return "\n".join(rows) + "\n"


def random_walk_csv(rng, n=300, price=10000.0, gap_every=None):
    rows = ["timestamp,open,high,low,close"]
    minute = 0
    for i in range(n):
        o = price
        c = o * (1 + rng.normal(0, 0.001))
        h = max(o, c) * (1 + abs(rng.normal(0, 0.0005)))
        l = min(o, c) * (1 - abs(rng.normal(0, 0.0005)))
        rows.append(_row(minute, o, h, l, c))
        price = c
        minute += 1
        if gap_every and i % gap_every == gap_every - 1:
            minute += 3
    return "\n".join(rows) + "\n"
