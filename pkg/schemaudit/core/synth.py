"""Synthetic tensors with planted vote structure, and the reference oracle."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config.config_loader import ConfigLoader
from ..exceptions.audit_exceptions import ConfigurationError
from .schema import Schema
from .tensor import LongRow, ResponseTensor

logger = logging.getLogger('schemaudit.synth')

MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CoactivationTarget:
    """Planted CondOv(source -> target) at t=1."""
    source: str
    target: str
    rate: float


@dataclass(frozen=True)
class PlantedSpec:
    """Target vote distributions over {0..A} per criterion plus planted co-activation."""
    panel_size: int
    distributions: Dict[str, Tuple[float, ...]]
    coactivation: Tuple[CoactivationTarget, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.panel_size < 1:
            raise ConfigurationError(f"panel_size must be at least 1, got {self.panel_size}")
        if not self.distributions:
            raise ConfigurationError("Planted spec needs at least one criterion")
        for q, dist in self.distributions.items():
            if len(dist) != self.panel_size + 1:
                raise ConfigurationError(
                    f"Distribution for {q} has {len(dist)} entries, expected {self.panel_size + 1}")
            if any(p < 0 for p in dist) or abs(sum(dist) - 1.0) > MASS_TOLERANCE:
                raise ConfigurationError(f"Distribution for {q} must be non-negative and sum to 1")
        targets = set()
        for link in self.coactivation:
            for q in (link.source, link.target):
                if q not in self.distributions:
                    raise ConfigurationError(f"Co-activation refers to unknown criterion '{q}'")
            if link.source == link.target:
                raise ConfigurationError(f"Co-activation of {link.source} with itself")
            if not 0.0 <= link.rate <= 1.0:
                raise ConfigurationError(f"Co-activation rate {link.rate} outside [0, 1]")
            if link.target in targets:
                raise ConfigurationError(f"Criterion {link.target} has more than one planted source")
            targets.add(link.target)
        self.generation_order()

    @property
    def criterion_ids(self) -> Tuple[str, ...]:
        return tuple(self.distributions)

    def source_of(self, criterion_id: str) -> Optional[CoactivationTarget]:
        return next((link for link in self.coactivation if link.target == criterion_id), None)

    def generation_order(self) -> List[str]:
        """Criteria ordered so every planted source precedes its target.

        Raises:
            ConfigurationError: If the co-activation links form a cycle
        """
        order: List[str] = []
        pending = list(self.distributions)
        while pending:
            ready = [q for q in pending
                     if self.source_of(q) is None or self.source_of(q).source in order]
            if not ready:
                raise ConfigurationError(f"Co-activation links form a cycle among {', '.join(pending)}")
            order.append(ready[0])
            pending.remove(ready[0])
        return order

    @staticmethod
    def from_dict(config: Dict[str, Any]) -> 'PlantedSpec':
        try:
            criteria = config['criteria']
            panel_size = int(config['panel_size'])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Planted spec needs 'panel_size' and 'criteria': {e}")
        links = tuple(
            CoactivationTarget(str(link['source']), str(link['target']), float(link['rate']))
            for link in config.get('coactivation') or []
        )
        return PlantedSpec(
            panel_size=panel_size,
            distributions={str(q): tuple(float(p) for p in dist) for q, dist in criteria.items()},
            coactivation=links,
            seed=int(config.get('seed', 0)),
        )

    @staticmethod
    def from_file(path: str) -> 'PlantedSpec':
        spec = PlantedSpec.from_dict(ConfigLoader.read_config(path))
        logger.info(f"Loaded planted spec from {path}: {len(spec.distributions)} criteria, A={spec.panel_size}")
        return spec


@dataclass
class SynthReport:
    """Achieved versus target structure of a generated tensor."""
    n_units: int
    target_histograms: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    achieved_histograms: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    coactivation: List[Dict[str, Any]] = field(default_factory=list)
    infeasible: List[str] = field(default_factory=list)

    def total_variation(self, criterion_id: str) -> float:
        target = np.asarray(self.target_histograms[criterion_id])
        achieved = np.asarray(self.achieved_histograms[criterion_id])
        return float(np.abs(target - achieved).sum() / 2)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n_units': self.n_units,
            'criteria': {
                q: {
                    'target': list(self.target_histograms[q]),
                    'achieved': list(self.achieved_histograms[q]),
                    'total_variation': self.total_variation(q),
                }
                for q in self.target_histograms
            },
            'coactivation': self.coactivation,
            'infeasible': self.infeasible,
        }


class SyntheticGenerator:
    """Draws tensors whose vote histograms and co-activation follow a planted spec."""

    @staticmethod
    def generate(spec: PlantedSpec, n_units: int) -> ResponseTensor:
        return SyntheticGenerator.generate_with_report(spec, n_units)[0]

    @staticmethod
    def generate_with_report(spec: PlantedSpec, n_units: int) -> Tuple[ResponseTensor, SynthReport]:
        """Generate a tensor deterministically from spec.seed.

        Engagement of a planted target is drawn conditionally on its source's
        engagement; the unconditional rate is held at the target's planted
        value where feasible. Infeasible links are clipped and reported.

        Raises:
            ConfigurationError: If n_units < 1
        """
        if n_units < 1:
            raise ConfigurationError(f"n_units must be at least 1, got {n_units}")
        rng = np.random.default_rng(spec.seed)
        A = spec.panel_size
        report = SynthReport(n_units=n_units)
        engaged: Dict[str, np.ndarray] = {}
        counts: Dict[str, np.ndarray] = {}

        for q in spec.generation_order():
            dist = np.asarray(spec.distributions[q])
            p_engaged = 1.0 - dist[0]
            link = spec.source_of(q)
            if link is None:
                engaged[q] = rng.random(n_units) < p_engaged
            else:
                p_source = 1.0 - spec.distributions[link.source][0]
                p_else = (p_engaged - p_source * link.rate) / (1.0 - p_source) if p_source < 1.0 else 0.0
                if not 0.0 <= p_else <= 1.0:
                    logger.warning(f"Planted link {link.source}->{q} at {link.rate} is infeasible; clipping")
                    report.infeasible.append(f"{link.source}->{q}")
                    p_else = min(max(p_else, 0.0), 1.0)
                draws = rng.random(n_units)
                engaged[q] = np.where(engaged[link.source], draws < link.rate, draws < p_else)

            positive = dist[1:]
            if positive.sum() > 0:
                levels = rng.choice(np.arange(1, A + 1), size=n_units, p=positive / positive.sum())
            else:
                if engaged[q].any():
                    report.infeasible.append(f"{q}: engaged without positive vote mass")
                levels = rng.integers(1, A + 1, size=n_units)
            counts[q] = np.where(engaged[q], levels, 0)

        criterion_ids = spec.criterion_ids
        values = np.zeros((n_units, A, len(criterion_ids)), dtype=np.uint8)
        for j, q in enumerate(criterion_ids):
            for s in range(n_units):
                k = int(counts[q][s])
                if k:
                    values[s, rng.choice(A, size=k, replace=False), j] = 1

        for q in criterion_ids:
            histogram = np.bincount(counts[q], minlength=A + 1) / n_units
            report.target_histograms[q] = tuple(spec.distributions[q])
            report.achieved_histograms[q] = tuple(float(x) for x in histogram)
        for link in spec.coactivation:
            source = engaged[link.source]
            achieved = float((source & engaged[link.target]).sum() / source.sum()) if source.any() else None
            report.coactivation.append(
                {'source': link.source, 'target': link.target, 'target_rate': link.rate, 'achieved': achieved})

        tensor = ResponseTensor(
            unit_ids=tuple(f"s{i + 1}" for i in range(n_units)),
            annotator_ids=tuple(f"a{i + 1}" for i in range(A)),
            criterion_ids=criterion_ids,
            values=values,
            source=f"synth(seed={spec.seed})",
        )
        logger.info(f"Generated synthetic tensor {n_units}x{A}x{len(criterion_ids)} with seed {spec.seed}")
        return tensor, report

    @staticmethod
    def to_long_rows(tensor: ResponseTensor) -> List[LongRow]:
        return [
            LongRow(u, a, q, int(tensor.values[s, i, j]))
            for s, u in enumerate(tensor.unit_ids)
            for i, a in enumerate(tensor.annotator_ids)
            for j, q in enumerate(tensor.criterion_ids)
        ]

    @staticmethod
    def oracle_audit(tensor: ResponseTensor, schema: Schema, t: int) -> Dict[str, Any]:
        """Every stability and separability quantity by nested loops over the definitions.

        Shares no intermediate structure with the vectorised analyzers. Empty
        focus sets yield None rates.
        """
        Y = tensor.values.tolist()
        units = range(len(tensor.unit_ids))
        annotators = range(len(tensor.annotator_ids))
        criteria = list(tensor.criterion_ids)
        A = len(tensor.annotator_ids)
        n = len(tensor.unit_ids)

        votes = {}
        for s in units:
            for j, q in enumerate(criteria):
                total = 0
                for a in annotators:
                    total += Y[s][a][j]
                votes[(s, q)] = total

        focus = {q: [s for s in units if votes[(s, q)] >= t] for q in criteria}

        stability = {}
        for q in criteria:
            size = len(focus[q])
            row = {'focus_size': size, 'activation': size / n if n else None}
            if size == 0:
                row.update({'distribution': None, 'uy': None, 'as': None, 'nt': None})
            else:
                dist = {}
                for k in range(t, A + 1):
                    dist[k] = sum(1 for s in focus[q] if votes[(s, q)] == k) / size
                uy = as_ = nt = 0.0
                for k, mass in dist.items():
                    if k == A:
                        uy += mass
                    elif 1 <= k <= A - 1 and abs(2 * k - A) <= 1:
                        nt += mass
                    elif k >= max(t, 1):
                        as_ += mass
                row.update({'distribution': dist, 'uy': uy, 'as': as_, 'nt': nt})
            stability[q] = row

        condov = {}
        for q in criteria:
            for q2 in criteria:
                if not focus[q]:
                    condov[(q, q2)] = None
                else:
                    both = sum(1 for s in focus[q] if s in focus[q2])
                    condov[(q, q2)] = both / len(focus[q])

        substantive = [c.id for c in schema.substantive_categories]
        gamma, m = [], []
        for s in units:
            engaged = [q for q in criteria if votes[(s, q)] >= t]
            gamma.append(len(engaged))
            active = 0
            for c in substantive:
                if any(schema.category_of(q) == c for q in engaged):
                    active += 1
            m.append(active)

        covered = [s for s in units if m[s] >= 1]
        histogram: Dict[int, int] = {}
        for s in covered:
            histogram[gamma[s]] = histogram.get(gamma[s], 0) + 1

        return {
            'votes': votes,
            'focus': focus,
            'stability': stability,
            'condov': condov,
            'gamma': gamma,
            'm': m,
            'covered_count': len(covered),
            'overlap_cat_count': sum(1 for s in units if m[s] >= 2),
            'overlap_crit_count': sum(1 for s in units if gamma[s] >= 2),
            'gamma_histogram': histogram,
            'mean_gamma': sum(gamma[s] for s in covered) / len(covered) if covered else None,
        }
