import flatpath as fp


def two_chart_square_torus():
    """Unit square torus split into two rectangle charts.

    The mid-edge vertices form a second marked point, so the surface lives in
    a two-marked-point stratum (kappa = 2) and exercises crossings between
    distinct polygons.
    """
    A = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.0, 0.5)]
    B = [(0.0, 0.5), (1.0, 0.5), (1.0, 1.0), (0.0, 1.0)]
    gluings = [
        ((0, 0), (1, 2)),   # A bottom <-> B top (torus wrap)
        ((0, 2), (1, 0)),   # A top <-> B bottom (interior seam)
        ((0, 1), (0, 3)),   # A right <-> A left
        ((1, 1), (1, 3)),   # B right <-> B left
    ]
    return fp.build_surface([A, B], gluings, name="two-chart-torus")
