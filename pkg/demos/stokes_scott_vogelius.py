"""Scott-Vogelius Stokes pair on Alfeld-split meshes: continuous quadratic
velocity with discontinuous linear pressure gives pointwise divergence-free
velocities."""
from macrotab import meshfem as mf

rows = mf.stokes_study((2, 4, 8))
print(mf.rows_to_csv(rows, mf.STOKES_COLUMNS,
                     mf.study_rates(rows, ("velocityL2", "pressureL2"))))
