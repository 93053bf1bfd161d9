"""Clamped plate problem on perturbed meshes of the unit square with the C1
macroelements, printing errors and observed rates."""
import sys

from macrotab.elements import get_element
from macrotab import meshfem as mf

names = sys.argv[1:] or ["ps6", "hct-red", "hct3"]
cols = mf.BIHARMONIC_COLUMNS
for name in names:
    rows = mf.biharmonic_study(get_element(name), (2, 4, 8))
    print(f"# {name}")
    print(mf.rows_to_csv(rows, cols, mf.study_rates(rows, cols[2:])))
