#pragma once

#include "satnerf/geodesy.hpp"

namespace satnerf {

struct UtmCoord {
  double easting = 0;
  double northing = 0;
  int zone = 0;
  bool south = false;
};

int utm_zone_for(double lon_deg);

// Transverse Mercator series (k0 = 0.9996), mm-accurate inside the zone.
UtmCoord geodetic_to_utm(const GeodeticPoint& g, int forced_zone = 0);
GeodeticPoint utm_to_geodetic(const UtmCoord& u);

}  // namespace satnerf
