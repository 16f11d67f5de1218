"""Synthetic stay/event tables in the ingest schema.

Each stay draws a latent standard-normal score per label. The label's
propensity is ``Phi(a + slope * z)``, with ``a`` solved in closed form so
the mean propensity equals the target prevalence. One first-24h signal per
label shifts with ``signal_strength * z`` (see :data:`PLANTED_FEATURES`).
In hours 24-72 the generator writes readings that stay clear of every CET
threshold, then plants threshold-crossing readings for the labels drawn
positive. truth.csv holds the planted labels.

All constants below are simulation settings, not clinical claims.
"""

import io
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .ingest import SignalKind
from .labeler import LABELS
from .seeding import DEFAULT_SEED, rng_for

PLANTED_FEATURES = {
    "respiratory": "rr_mean",
    "hemodynamic": "sbp_mean",
    "renal": "creatinine_latest",
    "neurologic": "hr_mean",
}

# per-stay baseline ranges (uniform) and per-reading noise sd
BASELINES = {
    SignalKind.SPO2: (94.0, 99.0, 1.0),
    SignalKind.SBP: (100.0, 140.0, 8.0),
    SignalKind.MAP: (70.0, 100.0, 6.0),
    SignalKind.HR: (60.0, 100.0, 6.0),
    SignalKind.RR: (12.0, 20.0, 2.5),
}
CREATININE_RANGE = (0.6, 1.1)
# shift of the planted signal per unit latent score at signal_strength 1
SHIFTS = {"respiratory": 2.0, "hemodynamic": -6.0, "renal": 0.15, "neurologic": 6.0}
# label-window clipping that keeps unplanted readings clear of the rules
SAFE = {
    SignalKind.SPO2: (91.0, 100.0),
    SignalKind.SBP: (91.0, 250.0),
    SignalKind.MAP: (66.0, 180.0),
    SignalKind.HR: (30.0, 200.0),
    SignalKind.RR: (6.0, 28.0),
}
DECIMALS = {
    SignalKind.SPO2: 1,
    SignalKind.SBP: 1,
    SignalKind.MAP: 1,
    SignalKind.HR: 1,
    SignalKind.RR: 1,
    SignalKind.CREATININE: 2,
    SignalKind.LACTATE: 1,
    SignalKind.PH: 2,
    SignalKind.GCS: 0,
    SignalKind.SEDATION: 0,
}
STAY_ID_BASE = 30_000_000
HORIZON_HOURS = 72


@dataclass
class SynthConfig:
    n_stays: int = 1000
    seed: int = DEFAULT_SEED
    prevalence: tuple = (0.3, 0.25, 0.15, 0.2)
    signal_strength: float = 1.0
    missingness: dict = field(default_factory=lambda: {"lactate": 0.46, "ph": 0.44})
    propensity_slope: float = 3.0
    vital_every_h: int = 1
    creatinine_every_h: int = 12
    gcs_every_h: int = 8
    lab_every_h: int = 12
    sedation_share: float = 0.3
    label_noise: float = 0.0

    def __post_init__(self):
        if self.n_stays < 10:
            raise ValueError("n_stays must be >= 10")
        if len(self.prevalence) != 4 or not all(0 < p < 1 for p in self.prevalence):
            raise ValueError("prevalence must be four values in (0, 1)")
        if self.signal_strength < 0:
            raise ValueError("signal_strength must be >= 0")
        for k, v in self.missingness.items():
            SignalKind.parse(k)
            if not 0 <= v < 1:
                raise ValueError(f"missingness for {k} must lie in [0, 1)")

    def missing_rate(self, kind):
        return float(self.missingness.get(kind.token, 0.0))


@dataclass
class SynthCohort:
    stays: dict  # column name -> array
    stay_index: np.ndarray  # per event
    minute: np.ndarray  # per event, minutes after intime
    signal: np.ndarray
    value: np.ndarray
    truth: np.ndarray  # (n, 4) bool
    latent: np.ndarray  # (n, 4)


def _intercepts(prevalence, slope):
    # E[Phi(a + b z)] = Phi(a / sqrt(1 + b^2)) for z ~ N(0, 1)
    nd = NormalDist()
    return np.array([nd.inv_cdf(p) * np.sqrt(1 + slope**2) for p in prevalence])


def _phi(x):
    from scipy.special import ndtr

    return ndtr(x)


def simulate(cfg: SynthConfig) -> SynthCohort:
    n = cfg.n_stays
    rng = rng_for(cfg.seed, "synth")
    s = cfg.signal_strength

    z = rng.standard_normal((n, 4))
    prop = _phi(_intercepts(cfg.prevalence, cfg.propensity_slope) + cfg.propensity_slope * z)
    want = rng.random((n, 4)) < prop

    present = {k: rng.random(n) >= cfg.missing_rate(k) for k in SignalKind}
    present[SignalKind.SEDATION] = np.ones(n, dtype=bool)

    anchor_age = rng.integers(20, 90, n)
    anchor_year = rng.integers(2110, 2190, n)
    year = anchor_year + rng.integers(0, 3, n)
    day = rng.integers(0, 365, n)
    minute_of_day = rng.integers(0, 24 * 60, n)
    intime = (
        (year - 1970).astype("datetime64[Y]").astype("datetime64[D]")
        + day.astype("timedelta64[D]")
    ).astype("datetime64[m]") + minute_of_day.astype("timedelta64[m]")
    gender = np.where(rng.random(n) < 0.5, "F", "M")

    parts = []  # (stay_index, minute, signal, value)

    def emit(idx, hours, kind, values):
        jitter = rng.integers(0, 60, hours.shape)
        vals = np.round(values, DECIMALS[kind])
        parts.append((np.broadcast_to(idx[:, None], hours.shape).ravel(),
                      (hours * 60 + jitter).ravel(), np.full(hours.size, int(kind), dtype=np.int8), vals.ravel()))

    planted_mean = {
        SignalKind.RR: SHIFTS["respiratory"] * s * z[:, 0],
        SignalKind.SBP: SHIFTS["hemodynamic"] * s * z[:, 1],
        SignalKind.HR: SHIFTS["neurologic"] * s * z[:, 3],
    }
    all_idx = np.arange(n)
    v_hours = np.arange(0, HORIZON_HOURS, cfg.vital_every_h)
    in_window = v_hours >= 24
    win_hours = v_hours[in_window]
    truth = np.zeros((n, 4), dtype=bool)

    vitals = {}
    for kind, (lo, hi, sd) in BASELINES.items():
        mu = rng.uniform(lo, hi, n) + planted_mean.get(kind, 0.0)
        vals = mu[:, None] + sd * rng.standard_normal((n, len(v_hours)))
        vals[:, in_window] = np.clip(vals[:, in_window], *SAFE[kind])
        if kind == SignalKind.SPO2:
            vals = np.minimum(vals, 100.0)
        vitals[kind] = np.round(vals, DECIMALS[kind])

    def plant(rows, kind, count, low, high):
        if not len(rows):
            return
        cols = np.argsort(rng.random((len(rows), len(win_hours))), axis=1)[:, :count]
        block = vitals[kind][rows][:, in_window]
        block[np.arange(len(rows))[:, None], cols] = np.round(rng.uniform(low, high, (len(rows), count)), DECIMALS[kind])
        full = vitals[kind][rows]
        full[:, in_window] = block
        vitals[kind][rows] = full

    # respiratory: two or three sub-90 SpO2 or above-30 RR readings
    resp = want[:, 0] & (present[SignalKind.SPO2] | present[SignalKind.RR])
    use_spo2 = present[SignalKind.SPO2] & (~present[SignalKind.RR] | (rng.random(n) < 0.5))
    k = rng.integers(2, 4, n)
    for c in (2, 3):
        plant(np.flatnonzero(resp & use_spo2 & (k == c)), SignalKind.SPO2, c, 82.0, 89.4)
        plant(np.flatnonzero(resp & ~use_spo2 & (k == c)), SignalKind.RR, c, 31.0, 40.0)
    truth[:, 0] = resp

    # hemodynamic: one MAP < 65 or SBP < 90
    hemo = want[:, 1] & (present[SignalKind.MAP] | present[SignalKind.SBP])
    use_map = present[SignalKind.MAP] & (~present[SignalKind.SBP] | (rng.random(n) < 0.5))
    plant(np.flatnonzero(hemo & use_map), SignalKind.MAP, 1, 50.0, 64.4)
    plant(np.flatnonzero(hemo & ~use_map), SignalKind.SBP, 1, 70.0, 89.4)
    truth[:, 1] = hemo

    for kind in BASELINES:
        idx = np.flatnonzero(present[kind])
        emit(idx, np.broadcast_to(v_hours, (len(idx), len(v_hours))), kind, vitals[kind][idx])

    # creatinine: baseline readings in hours 0-24, window readings after
    c_hours = np.arange(0, HORIZON_HOURS, cfg.creatinine_every_h)
    c_base = c_hours < 24
    mu_cr = rng.uniform(*CREATININE_RANGE, n) + SHIFTS["renal"] * s * z[:, 2]
    cr = np.maximum(mu_cr[:, None] + 0.05 * rng.standard_normal((n, len(c_hours))), 0.3)
    cr = np.round(cr, 2)
    base_cr = cr[:, c_base][:, -1] if c_base.any() else np.full(n, np.nan)
    n_win = int((~c_base).sum())
    win_cr = np.round(np.maximum(base_cr[:, None] + rng.uniform(-0.1, 0.1, (n, n_win)), 0.3), 2)
    renal = want[:, 2] & present[SignalKind.CREATININE] & c_base.any() & (n_win > 0)
    if n_win:
        peak = np.maximum(base_cr + 0.35 + rng.uniform(0, 0.6, n), 1.25 + rng.uniform(0, 0.8, n))
        col = rng.integers(0, n_win, n)
        rows = np.flatnonzero(renal)
        win_cr[rows, col[rows]] = np.round(peak[rows], 2)
    cr[:, ~c_base] = win_cr
    truth[:, 2] = renal
    idx = np.flatnonzero(present[SignalKind.CREATININE])
    emit(idx, np.broadcast_to(c_hours, (len(idx), len(c_hours))), SignalKind.CREATININE, cr[idx])

    # neurologic: GCS drop of three or more, or a sedation event
    g_hours = np.arange(0, HORIZON_HOURS, cfg.gcs_every_h)
    g_base = g_hours < 24
    gcs_base = rng.choice([13.0, 14.0, 15.0], size=n, p=[0.1, 0.2, 0.7])
    gcs = np.repeat(gcs_base[:, None], len(g_hours), axis=1)
    n_gw = int((~g_base).sum())
    gcs[:, ~g_base] = gcs_base[:, None] - rng.integers(0, 3, (n, n_gw))
    neuro = want[:, 3]
    has_gcs = present[SignalKind.GCS] & g_base.any() & (n_gw > 0)
    sedate = neuro & (~has_gcs | (rng.random(n) < cfg.sedation_share))
    drop = neuro & ~sedate
    rows = np.flatnonzero(drop)
    if len(rows):
        cols = int(g_base.sum()) + rng.integers(0, n_gw, len(rows))
        gcs[rows, cols] = gcs_base[rows] - rng.integers(3, 6, len(rows))
    idx = np.flatnonzero(present[SignalKind.GCS])
    emit(idx, np.broadcast_to(g_hours, (len(idx), len(g_hours))), SignalKind.GCS, gcs[idx])
    rows = np.flatnonzero(sedate)
    emit(rows, rng.integers(24, HORIZON_HOURS, (len(rows), 1)), SignalKind.SEDATION, np.ones((len(rows), 1)))
    truth[:, 3] = neuro

    # lactate and pH: ingested, never featurized
    l_hours = np.arange(0, HORIZON_HOURS, cfg.lab_every_h)
    for kind, lo, hi, sd in ((SignalKind.LACTATE, 0.8, 2.5, 0.3), (SignalKind.PH, 7.32, 7.45, 0.02)):
        idx = np.flatnonzero(present[kind])
        vals = rng.uniform(lo, hi, len(idx))[:, None] + sd * rng.standard_normal((len(idx), len(l_hours)))
        emit(idx, np.broadcast_to(l_hours, (len(idx), len(l_hours))), kind, vals)

    if cfg.label_noise > 0:
        flip = rng.random((n, 4)) < cfg.label_noise
        truth ^= flip

    stay_index = np.concatenate([p[0] for p in parts])
    minute = np.concatenate([p[1] for p in parts])
    signal = np.concatenate([p[2] for p in parts])
    value = np.concatenate([p[3] for p in parts])
    order = np.lexsort((signal, minute, stay_index))
    stays = {
        "stay_id": (STAY_ID_BASE + all_idx).astype(str),
        "subject_id": (10_000_000 + all_idx).astype(str),
        "hadm_id": (20_000_000 + all_idx).astype(str),
        "intime": intime,
        "anchor_age": anchor_age,
        "anchor_year": anchor_year,
        "gender": gender,
    }
    return SynthCohort(stays, stay_index[order], minute[order], signal[order], value[order], truth, z)


def _ts_strings(t):
    return np.char.replace(np.datetime_as_string(t.astype("datetime64[s]"), unit="s"), "T", " ")


def _value_strings(signal, value):
    out = np.empty(len(value), dtype=object)
    for kind, dec in DECIMALS.items():
        m = signal == kind
        if m.any():
            fmt = f"{{:.{dec}f}}".format
            out[m] = [fmt(v) for v in value[m].tolist()]
    return out


def to_csv_bytes(sc: SynthCohort):
    """(stays.csv, events.csv, truth.csv) as UTF-8 bytes with LF line endings."""
    st = sc.stays
    buf = io.StringIO()
    buf.write("stay_id,subject_id,hadm_id,intime,anchor_age,anchor_year,gender\n")
    buf.writelines(
        f"{a},{b},{c},{d},{e},{f},{g}\n"
        for a, b, c, d, e, f, g in zip(
            st["stay_id"].tolist(), st["subject_id"].tolist(), st["hadm_id"].tolist(),
            _ts_strings(st["intime"]).tolist(), st["anchor_age"].tolist(), st["anchor_year"].tolist(),
            st["gender"].tolist(),
        )
    )
    stays_bytes = buf.getvalue().encode()

    times = st["intime"][sc.stay_index].astype("datetime64[m]") + sc.minute.astype("timedelta64[m]")
    tokens = np.array([k.token for k in SignalKind], dtype=object)
    ev = io.StringIO()
    ev.write("stay_id,charttime,signal,value\n")
    ev.writelines(
        f"{a},{b},{c},{d}\n"
        for a, b, c, d in zip(
            st["stay_id"][sc.stay_index].tolist(), _ts_strings(times).tolist(),
            tokens[sc.signal].tolist(), _value_strings(sc.signal, sc.value).tolist(),
        )
    )
    events_bytes = ev.getvalue().encode()

    tr = io.StringIO()
    tr.write("stay_id," + ",".join(LABELS) + "\n")
    tr.writelines(f"{sid},{r[0]},{r[1]},{r[2]},{r[3]}\n" for sid, r in zip(st["stay_id"].tolist(), sc.truth.astype(int).tolist()))
    return stays_bytes, events_bytes, tr.getvalue().encode()


def generate_cohort(cfg: SynthConfig):
    """Seeded synthetic cohort as (stays.csv, events.csv, truth.csv) bytes."""
    return to_csv_bytes(simulate(cfg))
