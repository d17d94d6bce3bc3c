"""How well Bob can guess the bit against how well Alice can cheat, over random codes.

For random [n, k] codes and parity strings, reports Bob's optimal error
probability and the cheating acceptance of the purification attack. Larger
overlaps mean Bob learns less, and the attack gets closer to certain success.

    python3 scripts/concealing_vs_binding.py --max-n 6 --per-size 5
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from bcjlsim.attack import attack_acceptance, attack_bound, build_attack
from bcjlsim.errors import InfeasibleContextError, InvalidCodeError
from bcjlsim.metrics import helstrom
from bcjlsim.protocol import LinearCode, SharedContext, format_bits, random_r


@dataclass(frozen=True)
class TradeoffConfig:
    min_n: int = 2
    max_n: int = 6
    per_size: int = 5
    seed: int = 0


def random_code(n: int, rng: np.random.Generator) -> LinearCode:
    while True:
        k = int(rng.integers(1, n))
        try:
            return LinearCode(rng.integers(0, 2, size=(k, n)).astype(np.uint8))
        except InvalidCodeError:
            continue


def rows(cfg: TradeoffConfig):
    rng = np.random.default_rng(cfg.seed)
    for n in range(cfg.min_n, cfg.max_n + 1):
        for _ in range(cfg.per_size):
            code = random_code(n, rng)
            try:
                ctx = SharedContext(code, random_r(code, rng))
            except InfeasibleContextError:
                continue
            att = build_attack(ctx)
            _, pe = helstrom(att.rho0, att.rho1)
            yield {
                "n": n,
                "k": code.k,
                "r": format_bits(ctx.r),
                "pe": pe,
                "overlap": att.overlap,
                "accept1": attack_acceptance(att, 1),
                "lower_bound": attack_bound(min(att.overlap, 1.0), 0.0),
            }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--min-n", type=int, default=TradeoffConfig.min_n)
    p.add_argument("--max-n", type=int, default=TradeoffConfig.max_n)
    p.add_argument("--per-size", type=int, default=TradeoffConfig.per_size)
    p.add_argument("--seed", type=int, default=TradeoffConfig.seed)
    cfg = TradeoffConfig(**{k.replace("-", "_"): v for k, v in vars(p.parse_args(argv)).items()})
    if not 1 <= cfg.min_n <= cfg.max_n <= 8:
        p.error("need 1 <= min-n <= max-n <= 8")

    print(f"{'n':>2} {'k':>2} {'r':>9} {'pe':>8} {'overlap':>8} {'accept1':>8} {'bound':>8}")
    violations = 0
    for row in rows(cfg):
        print(f"{row['n']:>2} {row['k']:>2} {row['r']:>9} {row['pe']:8.4f} {row['overlap']:8.4f} "
              f"{row['accept1']:8.4f} {row['lower_bound']:8.4f}")
        violations += row["accept1"] < row["lower_bound"] - 1e-8
    return 1 if violations else 0


if __name__ == "__main__":
    sys.exit(main())
