G0 = 9.80665  # m/s^2

MU_SUN = 1.32712440018e11  # km^3/s^2
MU_EARTH = 3.986e5  # km^3/s^2

J2_EARTH = 1.08262668e-3
R_EARTH_KM = 6378.1370  # J2 与阴影模型使用的地球半径

AU_KM = 149597870.66
EARTH_UNIT_KM = 6378.1363
YEAR_S = 365.25 * 86400.0
DAY_S = 86400.0

ECLIPSE_CT = 100.0
ECLIPSE_CS = 0.9

REGIME_HELIOCENTRIC = "heliocentric"
REGIME_GEOCENTRIC = "geocentric"
