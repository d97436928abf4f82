"""Musical-chairs arm occupation, as per-round state machines.

Three variants:

* MC1: unbounded; pull uniformly inside the target set until a positive
  reward certifies sole occupancy.
* MC2: budgeted; pull uniformly over all K arms, occupy on (arm in
  target) and (positive reward); sticky once occupied; reports 0 at
  budget exhaustion if nothing was occupied.
* MC3: like MC2 but the occupancy certificate is the absence of a
  collision flag (strong feedback model) instead of a positive reward.
"""

from __future__ import annotations

MC1 = "MC1"
MC2 = "MC2"
MC3 = "MC3"


class InvalidTargetError(ValueError):
    pass


class ContractViolation(RuntimeError):
    pass


class MusicalChairs:
    __slots__ = ("variant", "target", "K", "budget", "rounds_elapsed", "occupied")

    def __init__(self, variant, target, K, budget=None):
        if variant not in (MC1, MC2, MC3):
            raise ValueError(f"unknown variant {variant!r}")
        if variant == MC1:
            if not target:
                raise InvalidTargetError("MC1 needs a nonempty target set")
            if budget is not None:
                raise ValueError("MC1 is unbudgeted")
        else:
            if budget is None or budget < 0:
                raise ValueError(f"{variant} needs a nonnegative budget")
        self.variant = variant
        self.target = frozenset(target)
        self.K = K
        self.budget = budget
        self.rounds_elapsed = 0
        self.occupied = None

    # sorted list for deterministic uniform indexing
    @property
    def _targets(self):
        return sorted(self.target)

    @property
    def terminal(self) -> bool:
        if self.variant == MC1:
            return self.occupied is not None
        return self.rounds_elapsed >= self.budget

    @property
    def output(self) -> int:
        """Occupied arm, or 0 (only meaningful for MC2/MC3 at budget end)."""
        return self.occupied if self.occupied is not None else 0

    def choose(self, u: float) -> int:
        """Arm to pull this round, given a uniform draw in [0, 1)."""
        if self.terminal:
            raise ContractViolation(f"{self.variant} stepped after terminal state")
        if self.occupied is not None:
            return self.occupied
        if self.variant == MC1:
            ts = self._targets
            return ts[int(u * len(ts))]
        return int(u * self.K) + 1

    def observe(self, arm: int, reward: float, collision=None) -> None:
        if self.terminal:
            raise ContractViolation(f"{self.variant} observed after terminal state")
        if self.variant == MC3:
            if collision is None:
                raise ContractViolation("MC3 requires a collision flag")
        elif collision is not None:
            raise ContractViolation(f"{self.variant} must not receive a collision flag")
        if self.occupied is None and arm in self.target:
            if self.variant == MC3:
                if not collision:
                    self.occupied = arm
            elif reward > 0:
                self.occupied = arm
        self.rounds_elapsed += 1

    def remaining(self):
        """Rounds left in the budget (None for MC1)."""
        if self.variant == MC1:
            return None
        return self.budget - self.rounds_elapsed
