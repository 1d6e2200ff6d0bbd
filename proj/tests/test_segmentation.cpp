#include "support.hpp"

#include "papilla/error.hpp"
#include "papilla/segmentation.hpp"
#include "papilla/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace papilla;
using testing::kPi;

namespace {

Segment cloud_segment(std::vector<Vec3> pts, std::size_t center, double cut = 0.0) {
    Segment s;
    s.center = pts[center];
    s.center_index = static_cast<std::uint32_t>(center);
    s.mesh = TriangleMesh::build(std::move(pts), {});
    s.cut_radius = cut;
    return s;
}

// Dome z = sqrt(R² - ρ²) over a grid, flat outside.
TriangleMesh dome_surface(double half, double step, std::vector<std::pair<Vec3, double>> domes) {
    const auto n = static_cast<std::size_t>(2 * half / step) + 1;
    return testing::grid_mesh(n, n, step, [&](double x, double y) {
        double z = 0.0;
        for (const auto& [c, r] : domes) {
            const double rho2 = (x - half - c.x()) * (x - half - c.x()) + (y - half - c.y()) * (y - half - c.y());
            if (rho2 < r * r) z = std::max(z, c.z() * std::sqrt(1.0 - rho2 / (r * r)));
        }
        return z;
    });
}

Vec3 shift_to_grid(double half) { return Vec3(half, half, 0.0); }

} // namespace

TEST_CASE("ransac on an exact plane") {
    std::vector<Vec3> pts;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 100; ++i) pts.emplace_back(u(rng), u(rng), 0.0);
    const auto p = ransac_plane(pts, {});
    CHECK(std::abs(std::abs(p.normal.z()) - 1.0) < 1e-12);
    CHECK(std::abs(p.offset) < 1e-9);
    CHECK(p.inlier_count == 100);
}

TEST_CASE("ransac prefers the majority plane") {
    std::vector<Vec3> pts;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 90; ++i) pts.emplace_back(u(rng), u(rng), 0.0);
    for (int i = 0; i < 10; ++i) pts.emplace_back(u(rng), u(rng), 500.0);
    RansacConfig cfg;
    cfg.tolerance = 10.0;
    const auto p = ransac_plane(pts, cfg);
    CHECK(std::abs(p.normal.z()) > 1.0 - 1e-9);
    CHECK(std::abs(p.offset) < 1e-9);
    CHECK(p.inlier_count >= 90);
}

TEST_CASE("ransac on a noisy plane") {
    std::vector<Vec3> pts;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-100, 100), noise(-1, 1);
    for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng), 5.0 + noise(rng));
    RansacConfig cfg;
    cfg.tolerance = 2.0;
    cfg.seed = 9;
    const auto p = ransac_plane(pts, cfg);
    const double offset = p.offset * (p.normal.z() < 0 ? -1.0 : 1.0);
    CHECK(offset >= 4.0);
    CHECK(offset <= 6.0);
    CHECK(static_cast<double>(p.inlier_count) / 500.0 >= 0.99);
}

TEST_CASE("ransac rejects degenerate input") {
    CHECK_THROWS_AS(ransac_plane(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}, {}), NumericError);
    CHECK_THROWS_AS(ransac_plane(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, {}), NumericError);
}

TEST_CASE("local maximum") {
    Plane base;
    std::vector<Vec3> hemi;
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j < 36; ++j) {
            const double th = kPi / 2 * i / 20.0, ph = 2 * kPi * j / 36.0;
            hemi.emplace_back(100 * std::cos(th) * std::cos(ph), 100 * std::cos(th) * std::sin(ph), 100 * std::sin(th));
        }
    hemi.emplace_back(0, 0, 100);
    CHECK(hemi[local_maximum(hemi, base)].isApprox(Vec3(0, 0, 100)));

    const std::vector<Vec3> flat{{1, 0, 0}, {2, 0, 0}, {3, 1, 0}};
    CHECK(local_maximum(flat, base) == 0);

    std::vector<Vec3> cone;
    for (int i = 0; i < 50; ++i) {
        const double rho = 10.0 * i;
        cone.emplace_back(rho, 0.5 * rho, std::max(0.0, 300.0 - rho));
    }
    cone.emplace_back(0, 0, 300);
    CHECK(local_maximum(cone, base) == 0);
    CHECK_THROWS_AS(local_maximum(std::vector<Vec3>{}, base), DataError);
}

TEST_CASE("extract segment on a flat surface") {
    const auto surface = testing::grid_mesh(101, 101, 10.0);
    const auto seg = extract_segment(surface, Vec3(500, 500, 0), ExtractionConfig{});
    double worst = 0.0;
    for (const auto& v : seg.mesh.vertices()) worst = std::max(worst, std::abs(v.z()));
    CHECK(worst < 1e-9);
}

TEST_CASE("extract segment snaps to the dome apex") {
    const double half = 800;
    const auto surface = dome_surface(half, 10.0, {{Vec3(0, 0, 200), 300.0}});
    ExtractionConfig cfg;
    const auto seg = extract_segment(surface, shift_to_grid(half) + Vec3(200, 0, 0), cfg);
    CHECK((seg.center - (shift_to_grid(half) + Vec3(0, 0, 200))).norm() < 1e-9);
    CHECK(seg.mesh.vertices()[seg.center_index] == seg.center);
    CHECK(seg.up.z() > 0.99);
    for (const auto& v : seg.mesh.vertices()) CHECK((v - seg.center).norm() <= cfg.radius);
}

TEST_CASE("extract segment picks the taller of two domes") {
    const double half = 1200, r = 450;
    const auto surface =
        dome_surface(half, 10.0, {{Vec3(-r, 0, 200), 250.0}, {Vec3(r, 0, 260), 250.0}});
    const auto seg = extract_segment(surface, shift_to_grid(half), ExtractionConfig{});
    CHECK((seg.center - (shift_to_grid(half) + Vec3(r, 0, 260))).norm() < 1e-9);
}

TEST_CASE("scan of a surface smaller than one segment") {
    const auto surface = testing::grid_mesh(20, 20, 10.0, [](double x, double y) { return 0.002 * x * y; });
    CHECK(scan_segments(surface, ExtractionConfig{}, 100).size() <= 1);
}

TEST_CASE("scan recovers every papilla of a small sheet") {
    SynthConfig cfg;
    const double side = 6000.0;
    cfg.fungiform_density = 14.0 / (side * side / 1e8);
    cfg.filiform_density = 40.0 / (side * side / 1e8);
    const auto sheet = gen_sheet(cfg, side, side, 4);
    REQUIRE(sheet.placements.size() == 54);
    const auto segs = scan_segments(sheet.mesh, ExtractionConfig{}, 100000);
    std::size_t near = 0;
    for (const auto& s : segs) {
        double best = 1e18;
        for (const auto& p : sheet.placements) best = std::min(best, (s.center - p.apex).norm());
        if (best <= 50.0) ++near;
    }
    CHECK(near >= 54);
    const auto again = scan_segments(sheet.mesh, ExtractionConfig{}, 100000);
    REQUIRE(again.size() == segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) CHECK(again[i].center == segs[i].center);
}

TEST_CASE("radius feature") {
    std::vector<Vec3> pts{Vec3::Zero()};
    for (int i = 0; i < 89; ++i) pts.emplace_back(37.0 * (i % 7) / 6.0, 0, 0);
    for (int i = 0; i < 10; ++i) pts.emplace_back(0, 95, 0);
    CHECK(radius_feature(cloud_segment(pts, 0)) == 40.0);

    std::vector<Vec3> tight{Vec3::Zero(), {5, 0, 0}, {0, 3, 0}, {0, 0, -4}};
    CHECK(radius_feature(cloud_segment(tight, 0)) == 10.0);

    std::vector<Vec3> shell{Vec3::Zero()};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int i = 0; i < 999; ++i) shell.push_back(100.0 * Vec3(g(rng), g(rng), g(rng)).normalized());
    CHECK(radius_feature(cloud_segment(shell, 0)) == 100.0);
}

TEST_CASE("height feature on constructed shapes") {
    std::vector<Vec3> disk;
    for (int i = -30; i <= 30; ++i)
        for (int j = -30; j <= 30; ++j)
            if (i * i + j * j <= 900) disk.emplace_back(10.0 * i, 10.0 * j, 0.0);
    const auto center = static_cast<std::size_t>(
        std::find(disk.begin(), disk.end(), Vec3::Zero()) - disk.begin());
    CHECK(height_feature(cloud_segment(disk, center), 300.0) <= RansacConfig{}.tolerance);

    // Hemisphere of radius 100 on a dense annulus reaching out to 300.
    std::vector<Vec3> hemi{Vec3(0, 0, 100)};
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 24; ++j) {
            const double th = kPi / 2 * i / 10.0, ph = 2 * kPi * j / 24.0;
            hemi.emplace_back(100 * std::cos(th) * std::cos(ph), 100 * std::cos(th) * std::sin(ph), 100 * std::sin(th));
        }
    for (double rho = 105; rho <= 300; rho += 5)
        for (int j = 0; j < 72; ++j) hemi.emplace_back(rho * std::cos(2 * kPi * j / 72), rho * std::sin(2 * kPi * j / 72), 0);
    CHECK(height_feature(cloud_segment(hemi, 0), 320.0) == doctest::Approx(100.0).epsilon(0.05));

    std::vector<Vec3> cone{Vec3(0, 0, 300)};
    for (double rho = 5; rho <= 1500; rho += 5)
        for (int j = 0; j < 36; ++j)
            cone.emplace_back(rho * std::cos(2 * kPi * j / 36), rho * std::sin(2 * kPi * j / 36),
                              std::max(0.0, 300.0 - 2.0 * rho));
    CHECK(height_feature(cloud_segment(cone, 0), 1500.0) == doctest::Approx(300.0).epsilon(0.05));
    CHECK_THROWS_AS(height_feature(cloud_segment({Vec3::Zero(), Vec3(500, 0, 0)}, 0), 10.0), NumericError);
}

TEST_CASE("baseline features are invariant under rigid motions") {
    SynthConfig cfg;
    const auto surface = gen_fungiform(cfg, 3);
    const auto seg = extract_segment(surface, Vec3(50, -30, 0), ExtractionConfig{});
    const double r = radius_feature(seg), h = height_feature(seg, r);

    const Eigen::Matrix3d rot = testing::some_rotation();
    const Vec3 shift(1000, -2000, 300);
    Segment moved = seg;
    moved.mesh = testing::transformed(seg.mesh, rot, shift);
    moved.center = rot * seg.center + shift;
    CHECK(radius_feature(moved) == r);
    CHECK(height_feature(moved, r) == doctest::Approx(h).epsilon(1e-6));

    double previous = r;
    for (double c : {1.0, 1.3, 2.0, 3.5}) {
        Segment scaled = seg;
        scaled.mesh = testing::transformed(seg.mesh, Eigen::Matrix3d::Identity(), Vec3::Zero(), c);
        scaled.center = c * seg.center;
        scaled.cut_radius = c * seg.cut_radius;
        const double rc = radius_feature(scaled);
        CHECK(rc >= previous);
        previous = rc;
    }
}

TEST_CASE("segments round trip through their files") {
    const auto dir = std::filesystem::temp_directory_path() / "papilla_segment_test";
    std::filesystem::remove_all(dir);
    const auto surface = gen_filiform(SynthConfig{}, 1);
    auto seg = extract_segment(surface, Vec3(0, 0, 0), ExtractionConfig{});
    seg.id = "seg0001";
    seg.label = Label::filiform;
    seg.participant = "P03";
    seg.group_attrs = {{"gender", "male"}, {"age_group", "older"}};
    save_segment(dir, seg);
    const auto back = load_segment(dir / "seg0001.json");
    CHECK(back.mesh.vertices() == seg.mesh.vertices());
    CHECK(back.mesh.faces() == seg.mesh.faces());
    CHECK(back.center == seg.center);
    CHECK(back.center_index == seg.center_index);
    CHECK(back.label == Label::filiform);
    CHECK(back.participant == "P03");
    CHECK(back.group_attrs == seg.group_attrs);
    CHECK(load_segment_dir(dir).size() == 1);
    std::filesystem::remove_all(dir);
    CHECK(parse_label("none") == Label::none);
    CHECK_THROWS_AS(parse_label("tongue"), DataError);
}
