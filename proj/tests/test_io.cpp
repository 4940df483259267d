#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "support.hpp"
#include "taut/io.hpp"
#include "taut/knots.hpp"
#include "taut/rigidity.hpp"

using namespace taut;

namespace {

Polygon parse(const std::string& text) {
  std::istringstream in(text);
  return read_vect(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return 0;
}

Polygon square(double edge) {
  const double h = 0.5 * edge;
  return Polygon({{Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0), Vec3(-h, h, 0)}});
}

}  // namespace

TEST(Vect, MinimalTriangle) {
  const Polygon p = parse("VECT\n1 3 0\n-3\n0\n0 0 0\n1 0 0\n0 1 0\n");
  EXPECT_EQ(p.num_components(), 1u);
  EXPECT_EQ(p.num_vertices(), 3u);
  EXPECT_EQ(p.vertex(1), Vec3(1, 0, 0));
}

TEST(Vect, CommentsAndColorsAreTolerated) {
  const Polygon p = parse(
      "VECT # header\n2 7 2\n-3 -4\n1 1\n0 0 0 1 0 0 0 1 0\n"
      "# second component\n5 0 0\n6 0 0\n6 1 0\n5 1 1\n1 0 0 1\n0 0 1 1\n");
  EXPECT_EQ(p.num_components(), 2u);
  EXPECT_EQ(p.component_size(1), 4u);
  EXPECT_EQ(p.vertex(6), Vec3(5, 1, 1));
}

TEST(Vect, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Polygon p = testing_support::random_link(1 + seed % 3, 5 + seed % 17, 4000 + seed);
    const std::string text = write_vect(p);
    const Polygon q = parse(text);
    ASSERT_EQ(q.num_components(), p.num_components());
    for (std::size_t c = 0; c < p.num_components(); ++c) EXPECT_EQ(q.component_size(c), p.component_size(c));
    for (Eigen::Index i = 0; i < p.coords().size(); ++i) EXPECT_EQ(q.coords()[i], p.coords()[i]);
    EXPECT_EQ(write_vect(q), text);
  }
}

TEST(Vect, WrittenCountsUseClosedConvention) {
  const std::string text = write_vect(regular_polygon(5, 1.0));
  std::istringstream in(text);
  std::string head, line3;
  std::getline(in, head);
  std::getline(in, head);
  std::getline(in, line3);
  EXPECT_EQ(head, "1 5 1");
  EXPECT_EQ(line3, "-5");
}

TEST(Vect, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("VECTOR\n1 3 0\n-3\n0\n0 0 0\n1 0 0\n0 1 0\n"), 1u);
  EXPECT_EQ(error_line("VECT\n1 3 0\n3\n0\n0 0 0\n1 0 0\n0 1 0\n"), 3u);   // open polyline
  EXPECT_EQ(error_line("VECT\n1 4 0\n-3\n0\n0 0 0\n1 0 0\n0 1 0\n"), 3u);  // count mismatch
  EXPECT_EQ(error_line("VECT\n1 3 0\n-3\n0\n0 0 0\n1 nan 0\n0 1 0\n"), 6u);
  EXPECT_EQ(error_line("VECT\n1 3 0\n-3\n0\n0 0 0\n1 x 0\n0 1 0\n"), 6u);
  EXPECT_EQ(error_line("VECT\n1 3 0\n-3\n0\n0 0 0\n1 0 0\n"), 6u);  // truncated
  EXPECT_EQ(error_line("VECT\n1 3 0\n-3\n0\n0 0 0\n1 0 0\n0 1 0\n7\n"), 8u);
  EXPECT_EQ(error_line("VECT\n1 3 1\n-3\n0\n0 0 0\n1 0 0\n0 1 0\n"), 4u);  // color count mismatch
}

TEST(Vect, DegenerateGeometryIsAParseError) {
  EXPECT_THROW(parse("VECT\n1 3 0\n-3\n0\n0 0 0\n0 0 0\n0 1 0\n"), ParseError);
}

TEST(Contacts, EmptyActiveSet) {
  const Polygon p = regular_polygon(12, 10.0);
  const std::string csv = export_contacts(p, {}, {}, ContactFormat::Csv);
  EXPECT_EQ(csv, "s,t,comp_a,comp_b,d,lambda\n");
  const std::string svg = export_contacts(p, {}, {}, ContactFormat::Svg);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.find("class=\"strut\""), std::string::npos);
}

TEST(Contacts, SquareHasFourContactsAtDistanceTwo) {
  const Polygon sq = square(2.0);
  ActiveSetOptions opt;
  opt.ell = 2.0;
  const ActiveSets act = find_active_sets(sq, opt);
  const Resolution r = resolve_regularized(grad_length(sq), build_rigidity_matrix(sq, act));
  const ContactMap m = contact_map(sq, act, r.multipliers);
  ASSERT_EQ(m.contacts.size(), 4u);
  for (const Contact& c : m.contacts) {
    EXPECT_NEAR(c.distance, 2.0, 1e-12);
    EXPECT_LT(c.s, c.t);
    EXPECT_GE(c.s, 0.0);
    EXPECT_LE(c.t, m.component_lengths[0]);
    EXPECT_GE(c.multiplier, 0.0);
  }
  EXPECT_NEAR(m.component_lengths[0], 8.0, 1e-12);
  const std::string csv = export_contacts(sq, act, r.multipliers, ContactFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv, export_contacts(sq, act, r.multipliers, ContactFormat::Csv));
  const std::string svg = export_contacts(sq, act, r.multipliers, ContactFormat::Svg);
  std::size_t rects = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"strut\"", pos)) != std::string::npos; ++pos) ++rects;
  EXPECT_EQ(rects, 8u);  // plotted at (s, t) and (t, s)
  EXPECT_NE(svg.find("class=\"kink\""), std::string::npos);
}

TEST(Contacts, RowsAreSortedAndInRange) {
  const Polygon p = hopf_link(40, 2.0);
  ActiveSetOptions opt;
  opt.target = pthi(p);
  opt.strut_tol = 0.05;
  const ActiveSets act = find_active_sets(p, opt);
  const ContactMap m = contact_map(p, act, {});
  ASSERT_FALSE(m.contacts.empty());
  for (std::size_t i = 0; i < m.contacts.size(); ++i) {
    const Contact& c = m.contacts[i];
    EXPECT_LE(c.comp_a, c.comp_b);
    EXPECT_LE(c.s, m.component_lengths[c.comp_a] + 1e-12);
    EXPECT_LE(c.t, m.component_lengths[c.comp_b] + 1e-12);
    if (i > 0) {
      const Contact& b = m.contacts[i - 1];
      EXPECT_TRUE(std::tie(b.comp_a, b.comp_b, b.s, b.t) <= std::tie(c.comp_a, c.comp_b, c.s, c.t));
    }
  }
  EXPECT_EQ(m.component_lengths.size(), 2u);
}
