#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "taut/geometry.hpp"
#include "taut/thickness.hpp"

namespace taut {

/// Malformed input file; `line` is 1-based (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Geomview VECT. Every polyline must be closed (negative vertex count);
/// colors are read and discarded.
Polygon read_vect(std::istream& in);
Polygon read_vect_file(const std::string& path);
/// Coordinates at 17 significant digits, one RGBA color per component.
std::string write_vect(const Polygon& poly);
void write_vect_file(const Polygon& poly, const std::string& path);

struct Contact {
  double s = 0.0, t = 0.0;  ///< arclength positions, in ropelength units
  std::size_t comp_a = 0, comp_b = 0;
  double distance = 0.0;    ///< in ropelength units
  double multiplier = 0.0;
};

struct ArcInterval {
  std::size_t comp = 0;
  double s_start = 0.0, s_end = 0.0;
};

struct ContactMap {
  std::vector<double> component_lengths;  ///< ropelength units
  std::vector<Contact> contacts;          ///< sorted
  std::vector<ArcInterval> kinks;         ///< edges at a kinked vertex
};

/// Contacts for every strut with its multiplier (pass an empty vector for
/// none). Positions are measured from vertex 0 of each component and scaled
/// by 1 / thickness, so a tight curve reads in ropelength units.
ContactMap contact_map(const Polygon& poly, const ActiveSets& active, const Eigen::VectorXd& multipliers);

enum class ContactFormat { Csv, Svg };

/// CSV columns s,t,comp_a,comp_b,d,lambda; SVG is the triangular (s,t)
/// contact plot with component boundaries and kinked stretches on the diagonal.
std::string export_contacts(const Polygon& poly, const ActiveSets& active, const Eigen::VectorXd& multipliers,
                            ContactFormat format);

}  // namespace taut
