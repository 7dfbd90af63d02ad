"""Chase instances and their JSON form."""

import json
from dataclasses import dataclass

from .constraints import PartitionConstraint
from .exceptions import InstanceError
from .setfunc import GroundSet, function_from_dict


@dataclass
class Step:
    available: frozenset
    f: object
    target: float


@dataclass
class ChaseInstance:
    ground: GroundSet
    steps: list
    constraint: PartitionConstraint

    @property
    def T(self):
        return len(self.steps)

    @property
    def n(self):
        return self.ground.n

    @property
    def d(self):
        """Largest available set; the sparsity of every Wolsey row."""
        return max([len(s.available) for s in self.steps] + [1])

    def validate(self):
        """Check V_t <= OPT_t by brute force; raises InstanceError otherwise."""
        from .bench import brute_opt

        for t, s in enumerate(self.steps, 1):
            if s.f.n != self.n:
                raise InstanceError(f"step {t}: function has {s.f.n} elements, ground set {self.n}")
            if s.target < 0:
                raise InstanceError(f"step {t}: negative target")
            opt, _ = brute_opt(s.f, self.constraint, s.available)
            if s.target > opt + 1e-9:
                raise InstanceError(f"step {t}: target {s.target} exceeds OPT_t = {opt}")
        return True

    def to_dict(self):
        labels = self.ground.labels
        return {
            "ground": labels,
            "constraint": self.constraint.to_dict(labels),
            "steps": [
                {"available": self.ground.names(s.available),
                 "function": s.f.to_dict(labels),
                 "target": s.target}
                for s in self.steps
            ],
        }


def ground_from_dict(data):
    if "ground" in data:
        return GroundSet(labels=data["ground"])
    parts = data.get("constraint", {}).get("parts")
    if parts:
        return GroundSet(labels=[lab for p in parts for lab in p])
    raise InstanceError("instance needs a 'ground' list or constraint parts")


def instance_from_dict(data):
    try:
        ground = ground_from_dict(data)
        labels = ground.labels
        if "constraint" in data:
            C = PartitionConstraint.from_dict(data["constraint"], labels)
        else:
            C = PartitionConstraint.cardinality(ground.n, int(data.get("k", 1)))
        shared = data.get("function")
        steps = []
        for s in data["steps"]:
            spec = s.get("function", shared)
            if spec is None:
                raise InstanceError("step without a function and no shared function")
            avail = ground.indices(s.get("available", labels))
            steps.append(Step(avail, function_from_dict(spec, labels), float(s["target"])))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"invalid instance: {exc}") from exc
    return ChaseInstance(ground, steps, C)


def load_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def dump_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh, indent=2, sort_keys=True)
