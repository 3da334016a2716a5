#include "satnerf/utm.hpp"

#include <cmath>

namespace satnerf {

namespace {
constexpr double kK0 = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kE2 = kWgs84E2;
const double kEp2 = kE2 / (1.0 - kE2);

double meridian_arc(double phi) {
  const double e2 = kE2, e4 = e2 * e2, e6 = e4 * e2;
  return kWgs84A *
         ((1 - e2 / 4 - 3 * e4 / 64 - 5 * e6 / 256) * phi -
          (3 * e2 / 8 + 3 * e4 / 32 + 45 * e6 / 1024) * std::sin(2 * phi) +
          (15 * e4 / 256 + 45 * e6 / 1024) * std::sin(4 * phi) -
          (35 * e6 / 3072) * std::sin(6 * phi));
}
}  // namespace

int utm_zone_for(double lon_deg) {
  int zone = static_cast<int>(std::floor((lon_deg + 180.0) / 6.0)) + 1;
  if (zone < 1) zone = 1;
  if (zone > 60) zone = 60;
  return zone;
}

UtmCoord geodetic_to_utm(const GeodeticPoint& g, int forced_zone) {
  const int zone = forced_zone > 0 ? forced_zone : utm_zone_for(g.lon_deg);
  const double lon0 = (-183.0 + 6.0 * zone) * M_PI / 180.0;
  const double phi = g.lat_deg * M_PI / 180.0;
  const double lam = g.lon_deg * M_PI / 180.0;

  const double sp = std::sin(phi), cp = std::cos(phi);
  const double n = kWgs84A / std::sqrt(1 - kE2 * sp * sp);
  const double t = std::tan(phi) * std::tan(phi);
  const double c = kEp2 * cp * cp;
  const double a = (lam - lon0) * cp;
  const double m = meridian_arc(phi);

  const double a2 = a * a, a3 = a2 * a, a4 = a3 * a, a5 = a4 * a, a6 = a5 * a;
  UtmCoord u;
  u.zone = zone;
  u.south = g.lat_deg < 0;
  u.easting = kFalseEasting +
              kK0 * n *
                  (a + (1 - t + c) * a3 / 6 +
                   (5 - 18 * t + t * t + 72 * c - 58 * kEp2) * a5 / 120);
  u.northing =
      kK0 * (m + n * std::tan(phi) *
                     (a2 / 2 + (5 - t + 9 * c + 4 * c * c) * a4 / 24 +
                      (61 - 58 * t + t * t + 600 * c - 330 * kEp2) * a6 / 720));
  if (u.south) u.northing += kFalseNorthingSouth;
  return u;
}

GeodeticPoint utm_to_geodetic(const UtmCoord& u) {
  const double lon0 = (-183.0 + 6.0 * u.zone) * M_PI / 180.0;
  const double northing =
      u.south ? u.northing - kFalseNorthingSouth : u.northing;
  const double m = northing / kK0;
  const double e2 = kE2, e4 = e2 * e2, e6 = e4 * e2;
  const double mu = m / (kWgs84A * (1 - e2 / 4 - 3 * e4 / 64 - 5 * e6 / 256));
  const double se = std::sqrt(1 - e2);
  const double e1 = (1 - se) / (1 + se);
  const double e1_2 = e1 * e1, e1_3 = e1_2 * e1, e1_4 = e1_3 * e1;

  const double phi1 = mu + (3 * e1 / 2 - 27 * e1_3 / 32) * std::sin(2 * mu) +
                      (21 * e1_2 / 16 - 55 * e1_4 / 32) * std::sin(4 * mu) +
                      (151 * e1_3 / 96) * std::sin(6 * mu) +
                      (1097 * e1_4 / 512) * std::sin(8 * mu);

  const double sp = std::sin(phi1), cp = std::cos(phi1);
  const double c1 = kEp2 * cp * cp;
  const double t1 = std::tan(phi1) * std::tan(phi1);
  const double n1 = kWgs84A / std::sqrt(1 - e2 * sp * sp);
  const double r1 = kWgs84A * (1 - e2) / std::pow(1 - e2 * sp * sp, 1.5);
  const double d = (u.easting - kFalseEasting) / (n1 * kK0);
  const double d2 = d * d, d3 = d2 * d, d4 = d3 * d, d5 = d4 * d, d6 = d5 * d;

  const double phi =
      phi1 - (n1 * std::tan(phi1) / r1) *
                 (d2 / 2 -
                  (5 + 3 * t1 + 10 * c1 - 4 * c1 * c1 - 9 * kEp2) * d4 / 24 +
                  (61 + 90 * t1 + 298 * c1 + 45 * t1 * t1 - 252 * kEp2 -
                   3 * c1 * c1) *
                      d6 / 720);
  const double lam =
      lon0 + (d - (1 + 2 * t1 + c1) * d3 / 6 +
              (5 - 2 * c1 + 28 * t1 - 3 * c1 * c1 + 8 * kEp2 + 24 * t1 * t1) *
                  d5 / 120) /
                 cp;

  return {phi * 180.0 / M_PI, lam * 180.0 / M_PI, 0.0};
}

}  // namespace satnerf
