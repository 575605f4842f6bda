#include <gtest/gtest.h>

#include "granger_lab/io.hpp"

using namespace granger_lab;
using namespace granger_lab::io;

namespace {

PhaseGrid tiny_grid() {
    PhaseSpaceConfig c;
    c.topology = Topology::Indirect;
    c.noise = NoiseKind::ExtrinsicSNR;
    c.n = 60;
    c.iterations = 10;
    c.grids = {uniform_grid(-40, 40, 40), uniform_grid(-40, 40, 80), uniform_grid(-10, 10, 10)};
    c.seed = 8;
    return phase_space(c);
}

}  // namespace

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.35, 123456789.0}) EXPECT_EQ(parse_number(format_number(v)), v);
    EXPECT_EQ(format_number(0.35), "0.35");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_THROW(parse_number("1.5x"), InvalidArgument);
    EXPECT_THROW(parse_number(""), InvalidArgument);
}

TEST(SampleCsv, RoundTrip) {
    const auto s = generate(reference_config(Topology::Driver, 40, 1));
    const auto text = sample_csv(s);
    EXPECT_EQ(text.substr(0, 8), "t,x,y,z\n");
    const auto back = parse_sample_csv(text);
    ASSERT_EQ(back.length(), 40u);
    for (std::size_t t = 0; t < 40; ++t) {
        EXPECT_EQ(back.x[t], s.x[t]);
        EXPECT_EQ(back.y[t], s.y[t]);
        EXPECT_EQ(back.z[t], s.z[t]);
    }
    EXPECT_EQ(sample_csv(back), text);
}

TEST(SampleCsv, ErrorsNameTheDataRow) {
    std::string text = "t,x,y,z\n";
    for (int i = 1; i <= 30; ++i) text += std::to_string(i) + (i == 17 ? ",nan,1,2\n" : ",1,2,3\n");
    try {
        parse_sample_csv(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 17u);
        EXPECT_NE(std::string(e.what()).find("row 17"), std::string::npos);
    }
    EXPECT_THROW(parse_sample_csv("a,b,c,d\n1,2,3,4\n"), ParseError);
    EXPECT_THROW(parse_sample_csv("t,x,y,z\n1,2,3\n"), ParseError);
    EXPECT_THROW(parse_sample_csv("t,x,y,z\n1,2,inf,4\n"), ParseError);
    EXPECT_THROW(parse_sample_csv("t,x,y,z\n"), ParseError);
    EXPECT_NO_THROW(parse_sample_csv("t,x,y,z\r\n1,2,3,4\r\n"));
}

TEST(PhaseCsv, RoundTripAndPlane) {
    const auto g = tiny_grid();
    const auto text = phase_grid_csv(g);
    EXPECT_EQ(text.substr(0, kPhaseHeader.size()), kPhaseHeader);
    const auto rows = parse_phase_csv(text);
    ASSERT_EQ(rows.size(), g.cells.size());
    EXPECT_EQ(rows.front().topology, "indirect");
    EXPECT_EQ(rows.front().noise_kind, "extrinsic");
    for (auto kind : {RateKind::Spurious, RateKind::Unidentified, RateKind::LinkXZ, RateKind::LinkYZ})
        for (double v : g.config.grids[2]) {
            const auto from_grid = extract_plane(g, SeriesId::Z, v, kind);
            const auto from_rows = plane_from_rows(rows, SeriesId::Z, v, kind);
            EXPECT_EQ(from_grid.values, from_rows.values);
            EXPECT_EQ(from_grid.row_values, from_rows.row_values);
        }
    EXPECT_THROW(plane_from_rows(rows, SeriesId::Z, 5.0, RateKind::Spurious), OffGrid);
    EXPECT_THROW(parse_phase_csv("bad header\n"), ParseError);
}

TEST(SweepCsv, Columns) {
    SampleSizeSweepConfig c;
    c.sizes = {40};
    c.cases = 20;
    const auto s = sweep_sample_size(c);
    const auto text = sample_size_sweep_csv(s);
    const auto header = text.substr(0, text.find('\n'));
    EXPECT_EQ(header,
              "n,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified,p_spurious_vs_lr,"
              "p_unidentified_vs_lr,p_spurious_vs_wald,p_unidentified_vs_wald,p_spurious_vs_rao,"
              "p_unidentified_vs_rao");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);

    SignificanceSweepConfig a;
    a.alphas = {0.1, 0.2};
    a.iterations = 10;
    const auto sa = significance_sweep_csv(sweep_significance(a).result);
    EXPECT_EQ(sa.substr(0, sa.find('\n')), "alpha,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified");
    EXPECT_EQ(std::count(sa.begin(), sa.end(), '\n'), 7);
}

TEST(ColorMap, Anchors) {
    EXPECT_EQ(rate_color(0.0), (Rgb{0, 0, 255}));
    EXPECT_EQ(rate_color(0.5), (Rgb{255, 255, 255}));
    EXPECT_EQ(rate_color(1.0), (Rgb{255, 0, 0}));
    EXPECT_EQ(rate_color(0.25), (Rgb{128, 128, 255}));
}

TEST(ColorMap, InverseWithinOneStep) {
    for (int i = 0; i <= 100000; ++i) {
        const double r = i / 100000.0;
        EXPECT_LE(std::abs(color_rate(rate_color(r)) - r), 1.0 / 255.0);
    }
}

TEST(Render, ConstantPlanes) {
    Plane p;
    p.row_values = {0, 1, 2};
    p.col_values = {0, 1};
    p.values.assign(6, 0.0);
    auto img = render_plane(p, 4);
    EXPECT_EQ(img.width, 8u);
    EXPECT_EQ(img.height, 12u);
    for (auto px : img.pixels) EXPECT_EQ(px, (Rgb{0, 0, 255}));
    p.values.assign(6, 1.0);
    img = render_plane(p, 1);
    for (auto px : img.pixels) EXPECT_EQ(px, (Rgb{255, 0, 0}));
}

TEST(Render, PpmRoundTripRecoversRates) {
    const auto g = tiny_grid();
    const auto rows = parse_phase_csv(phase_grid_csv(g));
    for (auto kind : {RateKind::Spurious, RateKind::LinkXZ}) {
        const auto plane = plane_from_rows(rows, SeriesId::Y, 40.0, kind);
        const std::size_t scale = 3;
        const auto img = parse_ppm(ppm_bytes(render_plane(plane, scale)));
        for (std::size_t r = 0; r < plane.row_values.size(); ++r)
            for (std::size_t c = 0; c < plane.col_values.size(); ++c)
                for (std::size_t dy = 0; dy < scale; ++dy)
                    for (std::size_t dx = 0; dx < scale; ++dx)
                        EXPECT_LE(std::abs(color_rate(img.at(c * scale + dx, r * scale + dy)) - plane.at(r, c)),
                                  1.0 / 255.0);
    }
    EXPECT_THROW(parse_ppm("P3\n1 1\n255\n"), InvalidArgument);
}

TEST(Manifest, RoundTrip) {
    Manifest m;
    m.set("experiment", "sweep-alpha");
    m.set("seed", "4");
    m.set("seed", "5");
    const auto back = Manifest::parse(m.serialize());
    EXPECT_EQ(back.get("seed"), "5");
    EXPECT_EQ(back.entries().size(), 2u);
    EXPECT_EQ(back.serialize(), m.serialize());
    EXPECT_FALSE(back.get("missing").has_value());
    EXPECT_THROW(Manifest::parse("novalue\n"), InvalidArgument);
}
