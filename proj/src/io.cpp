#include "taut/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

namespace taut {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

namespace {

class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (!(line_stream_ >> tok)) {
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok)) throw ParseError(line_, fmt::format("unexpected end of file, expected {}", what));
    return tok;
  }

  long integer(const char* what) {
    const std::string tok = expect(what);
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw ParseError(line_, fmt::format("expected integer {}, got '{}'", what, tok));
    return v;
  }

  double real(const char* what) {
    const std::string tok = expect(what);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw ParseError(line_, fmt::format("expected number {}, got '{}'", what, tok));
    return v;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::istringstream line_stream_;
  std::size_t line_ = 0;
};

}  // namespace

Polygon read_vect(std::istream& in) {
  Tokens tok(in);
  const std::string head = tok.expect("VECT header");
  if (head != "VECT") throw ParseError(tok.line(), fmt::format("expected VECT header, got '{}'", head));
  const long ncomp = tok.integer("component count");
  const long nvert = tok.integer("vertex count");
  const long ncolor = tok.integer("color count");
  if (ncomp <= 0 || nvert <= 0 || ncolor < 0) throw ParseError(tok.line(), "counts must be positive");

  std::vector<long> sizes;
  long total = 0;
  for (long c = 0; c < ncomp; ++c) {
    const long n = tok.integer("per-component vertex count");
    if (n >= 0) throw ParseError(tok.line(), fmt::format("component {} is open (count {}); closed polylines need a negative count", c, n));
    if (-n < 3) throw ParseError(tok.line(), fmt::format("component {} has fewer than 3 vertices", c));
    sizes.push_back(-n);
    total += -n;
  }
  if (total != nvert) throw ParseError(tok.line(), fmt::format("vertex counts sum to {} but header says {}", total, nvert));
  long colors = 0;
  for (long c = 0; c < ncomp; ++c) {
    const long k = tok.integer("per-component color count");
    if (k < 0) throw ParseError(tok.line(), "negative color count");
    colors += k;
  }
  if (colors != ncolor) throw ParseError(tok.line(), fmt::format("color counts sum to {} but header says {}", colors, ncolor));

  std::vector<std::vector<Vec3>> comps;
  for (long c = 0; c < ncomp; ++c) {
    std::vector<Vec3> pts;
    for (long i = 0; i < sizes[c]; ++i) {
      Vec3 v;
      for (int d = 0; d < 3; ++d) {
        v[d] = tok.real("coordinate");
        if (!std::isfinite(v[d])) throw ParseError(tok.line(), "non-finite coordinate");
      }
      pts.push_back(v);
    }
    comps.push_back(std::move(pts));
  }
  for (long i = 0; i < 4 * ncolor; ++i) tok.real("color component");
  std::string extra;
  if (tok.next(extra)) throw ParseError(tok.line(), fmt::format("trailing data '{}'", extra));
  try {
    Polygon p(comps);
    p.validate();
    return p;
  } catch (const GeometryError& e) {
    throw ParseError(0, e.what());
  }
}

Polygon read_vect_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  return read_vect(in);
}

std::string write_vect(const Polygon& poly) {
  const std::size_t nc = poly.num_components();
  std::string out = fmt::format("VECT\n{} {} {}\n", nc, poly.num_vertices(), nc);
  for (std::size_t c = 0; c < nc; ++c) out += fmt::format("{}{}", c ? " " : "", -static_cast<long>(poly.component_size(c)));
  out += "\n";
  for (std::size_t c = 0; c < nc; ++c) out += c ? " 1" : "1";
  out += "\n";
  for (std::size_t i = 0; i < poly.num_vertices(); ++i) {
    const Vec3 v = poly.vertex(i);
    out += fmt::format("{:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  }
  for (std::size_t c = 0; c < nc; ++c) out += "0 0 0 1\n";
  return out;
}

void write_vect_file(const Polygon& poly, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << write_vect(poly);
  if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

// Arclength from vertex 0 of each component to the start of every edge.
std::vector<double> edge_starts(const Polygon& poly) {
  std::vector<double> s(poly.num_vertices(), 0.0);
  for (std::size_t c = 0; c < poly.num_components(); ++c) {
    double acc = 0.0;
    const std::size_t b = poly.component_begin(c);
    for (std::size_t k = 0; k < poly.component_size(c); ++k) {
      s[b + k] = acc;
      acc += poly.edge_length(b + k);
    }
  }
  return s;
}

}  // namespace

ContactMap contact_map(const Polygon& poly, const ActiveSets& active, const Eigen::VectorXd& multipliers) {
  ContactMap m;
  const double thi = pthi(poly);
  const double unit = std::isfinite(thi) && thi > 0 ? 1.0 / thi : 1.0;
  for (std::size_t c = 0; c < poly.num_components(); ++c) m.component_lengths.push_back(component_length(poly, c) * unit);
  const std::vector<double> starts = edge_starts(poly);
  auto position = [&](const EdgePoint& p) {
    return (starts[p.edge] + (1.0 - p.alpha) * poly.edge_length(p.edge)) * unit;
  };
  for (std::size_t i = 0; i < active.struts.size(); ++i) {
    const Strut& st = active.struts[i];
    Contact ct;
    ct.comp_a = poly.component_of(st.p.edge);
    ct.comp_b = poly.component_of(st.q.edge);
    ct.s = position(st.p);
    ct.t = position(st.q);
    if (ct.comp_a > ct.comp_b || (ct.comp_a == ct.comp_b && ct.s > ct.t)) {
      std::swap(ct.comp_a, ct.comp_b);
      std::swap(ct.s, ct.t);
    }
    ct.distance = st.length * unit;
    ct.multiplier = static_cast<Eigen::Index>(i) < multipliers.size() ? multipliers[static_cast<Eigen::Index>(i)] : 0.0;
    m.contacts.push_back(ct);
  }
  std::sort(m.contacts.begin(), m.contacts.end(), [](const Contact& a, const Contact& b) {
    if (a.comp_a != b.comp_a) return a.comp_a < b.comp_a;
    if (a.comp_b != b.comp_b) return a.comp_b < b.comp_b;
    if (a.s != b.s) return a.s < b.s;
    return a.t < b.t;
  });
  std::vector<std::size_t> kinked;
  for (const Kink& k : active.kinks) kinked.push_back(k.vertex);
  std::sort(kinked.begin(), kinked.end());
  kinked.erase(std::unique(kinked.begin(), kinked.end()), kinked.end());
  for (std::size_t v : kinked) {
    ArcInterval iv;
    iv.comp = poly.component_of(v);
    const double sv = starts[v] * unit;
    iv.s_start = sv - 0.5 * poly.edge_length(poly.prev(v)) * unit;
    iv.s_end = sv + 0.5 * poly.edge_length(v) * unit;
    m.kinks.push_back(iv);
  }
  return m;
}

namespace {

std::string to_csv(const ContactMap& m) {
  std::string out = "s,t,comp_a,comp_b,d,lambda\n";
  for (const Contact& c : m.contacts)
    out += fmt::format("{:.12g},{:.12g},{},{},{:.12g},{:.12g}\n", c.s, c.t, c.comp_a, c.comp_b, c.distance, c.multiplier);
  return out;
}

std::string to_svg(const ContactMap& m) {
  const double size = 600.0, margin = 40.0;
  double total = 0.0;
  std::vector<double> offset;
  for (double l : m.component_lengths) {
    offset.push_back(total);
    total += l;
  }
  const double k = total > 0 ? size / total : 1.0;
  auto X = [&](std::size_t c, double s) { return margin + k * (offset[c] + s); };
  auto Y = [&](std::size_t c, double s) { return margin + size - k * (offset[c] + s); };
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n",
      size + 2 * margin);
  out += fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"white\" stroke=\"black\"/>\n", margin, size);
  // Diagonal with an arclength ruler every 5 units.
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{1}\" y2=\"{0}\" stroke=\"gray\"/>\n", margin, margin + size);
  for (double s = 0.0; s <= total; s += 5.0) {
    const double x = margin + k * s, y = margin + size - k * s;
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\"/>\n", x - 3, y - 3, x + 3, y + 3);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"9\">{:g}</text>\n", x + 4, y + 10, s);
  }
  for (std::size_t c = 1; c < offset.size(); ++c) {
    const double p = margin + k * offset[c];
    out += fmt::format("<line class=\"boundary\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"blue\"/>\n", p, margin, margin + size);
    const double q = margin + size - k * offset[c];
    out += fmt::format("<line class=\"boundary\" x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"blue\"/>\n", q, margin, margin + size);
  }
  for (const ArcInterval& iv : m.kinks)
    out += fmt::format("<line class=\"kink\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" stroke-width=\"4\"/>\n",
                       X(iv.comp, iv.s_start), Y(iv.comp, iv.s_start), X(iv.comp, iv.s_end), Y(iv.comp, iv.s_end));
  const double w = std::max(2.0, 0.5 * k);
  for (const Contact& c : m.contacts) {
    out += fmt::format("<rect class=\"strut\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"darkgreen\"/>\n",
                       X(c.comp_a, c.s) - w / 2, Y(c.comp_b, c.t) - w / 2, w, w);
    out += fmt::format("<rect class=\"strut\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"darkgreen\"/>\n",
                       X(c.comp_b, c.t) - w / 2, Y(c.comp_a, c.s) - w / 2, w, w);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

std::string export_contacts(const Polygon& poly, const ActiveSets& active, const Eigen::VectorXd& multipliers,
                            ContactFormat format) {
  const ContactMap m = contact_map(poly, active, multipliers);
  return format == ContactFormat::Csv ? to_csv(m) : to_svg(m);
}

}  // namespace taut
