# app/api/endpoints/__init__.py

from .lattice_routes import LatticeRoutes
from .sobolev_routes import SobolevRoutes
from .extrapolation_routes import ExtrapolationRoutes
