"""Place landmarks in the bundled ring room and let four robots map it.

The script prints the landmark count, the reference Cech complex, then the
complex built by the robots every 5000 observations.  The final complex is
written as an SVG next to this file.

    python3 demos/explore_ring_room.py [seed]
"""
import sys
from pathlib import Path

from landmark_complex.cli import Scenario, Setup, render_svg
from landmark_complex.exploration import run_lcca

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
setup = Setup(Scenario())  # ring room, 1 m sector footprint, 8 headings
ref = setup.cech()
print(f"{len(setup.sites)} landmarks placed; reference complex {ref}")

team = setup.team(seed, keep_trace=False)


def progress(t):
    got = len(t.complex.c2 & ref.c2) / len(ref.c2)
    print(f"  {t.observations:6d} observations  phase {t.phase}  {got:6.1%} of reference triangles")


team.hooks.append((5000, progress))
summary = run_lcca(team)
progress(team)
print(f"stopped by {summary.stop_reason} after {summary.observations} observations, "
      f"{summary.hiw_rounds} homology rounds")

out = Path(__file__).with_name(f"ring_room_seed{seed}.svg")
out.write_text(render_svg(setup.grid, setup.sites, team.complex, team.robots))
print(f"wrote {out}")
