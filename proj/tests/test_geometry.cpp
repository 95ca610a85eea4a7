#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nfl/geometry.hpp"

using nfl::HyperRectangle;
using nfl::RectUnion;

namespace {

HyperRectangle rect2(double lx, double ly, double hx, double hy) {
    return HyperRectangle(Eigen::Vector2d(lx, ly), Eigen::Vector2d(hx, hy));
}

}  // namespace

TEST_CASE("construction validates invariants") {
    CHECK_THROWS_AS(rect2(1, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(HyperRectangle(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, std::nan(""))),
                    std::invalid_argument);
    CHECK_THROWS_AS(HyperRectangle(Eigen::Vector2d(0, 0), Eigen::VectorXd::Ones(3)),
                    std::invalid_argument);
    const auto ball = HyperRectangle::from_center_radius(Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4));
    CHECK(ball.lo == Eigen::Vector2d(-2, -2));
    CHECK(ball.hi == Eigen::Vector2d(4, 6));
}

TEST_CASE("partition basics") {
    const auto unit = rect2(0, 0, 1, 1);
    const auto single = nfl::partition(unit, Eigen::Vector2i(1, 1));
    REQUIRE(single.size() == 1);
    CHECK(single[0].lo == unit.lo);
    CHECK(single[0].hi == unit.hi);

    const auto cells = nfl::partition(rect2(0, 0, 2, 3), Eigen::Vector2i(2, 3));
    REQUIRE(cells.size() == 6);
    for (const auto& c : cells) {
        CHECK(c.widths()[0] == doctest::Approx(1.0));
        CHECK(c.widths()[1] == doctest::Approx(1.0));
    }

    CHECK_THROWS_AS(nfl::partition(unit, Eigen::Vector2i(0, 2)), std::invalid_argument);
}

TEST_CASE("partition tiles exactly") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        Eigen::VectorXd lo(dim), hi(dim);
        Eigen::VectorXi r(dim);
        for (int k = 0; k < dim; ++k) {
            double a = coord(rng), b = coord(rng);
            lo[k] = std::min(a, b);
            hi[k] = std::max(a, b) + 0.1;
            r[k] = 1 + static_cast<int>(rng() % 5);
        }
        const HyperRectangle rect(lo, hi);
        const auto cells = nfl::partition(rect, r);
        CHECK(static_cast<int>(cells.size()) == r.prod());

        double total = 0.0;
        for (const auto& c : cells) total += nfl::volume(c);
        CHECK(total == doctest::Approx(nfl::volume(rect)).epsilon(1e-12));

        // pairwise interior-disjoint
        for (size_t i = 0; i < cells.size(); ++i) {
            for (size_t j = i + 1; j < cells.size(); ++j) {
                bool open_overlap = true;
                for (int k = 0; k < dim; ++k) {
                    if (cells[i].lo[k] >= cells[j].hi[k] || cells[j].lo[k] >= cells[i].hi[k])
                        open_overlap = false;
                }
                CHECK_FALSE(open_overlap);
            }
        }

        // hull of the partition is the input, exactly
        const auto hull = nfl::bound_with_rectangle(RectUnion(cells));
        REQUIRE(hull);
        CHECK(hull->lo == rect.lo);
        CHECK(hull->hi == rect.hi);

        // random points are covered
        for (int s = 0; s < 50; ++s) {
            Eigen::VectorXd x(dim);
            for (int k = 0; k < dim; ++k)
                x[k] = lo[k] + (hi[k] - lo[k]) * std::uniform_real_distribution<double>(0, 1)(rng);
            CHECK(nfl::union_contains(RectUnion(cells), x, 0.0));
        }
    }
}

TEST_CASE("bound_with_rectangle") {
    CHECK_FALSE(nfl::bound_with_rectangle(RectUnion{}));

    const auto one = nfl::bound_with_rectangle(RectUnion({rect2(0, 0, 1, 1)}));
    REQUIRE(one);
    CHECK(one->lo == Eigen::Vector2d(0, 0));
    CHECK(one->hi == Eigen::Vector2d(1, 1));

    const auto two = nfl::bound_with_rectangle(RectUnion({rect2(0, 0, 1, 1), rect2(2, -1, 3, 0)}));
    REQUIRE(two);
    CHECK(two->lo == Eigen::Vector2d(0, -1));
    CHECK(two->hi == Eigen::Vector2d(3, 1));

    // hull contains every member
    std::mt19937_64 rng(7);
    RectUnion u;
    for (int i = 0; i < 8; ++i) {
        double a = std::uniform_real_distribution<double>(-3, 3)(rng);
        double b = std::uniform_real_distribution<double>(-3, 3)(rng);
        u.members.push_back(rect2(std::min(a, b), std::min(a, b), std::max(a, b), std::max(a, b)));
    }
    const auto hull = nfl::bound_with_rectangle(u);
    REQUIRE(hull);
    for (const auto& m : u.members) {
        CHECK((hull->lo.array() <= m.lo.array()).all());
        CHECK((hull->hi.array() >= m.hi.array()).all());
    }
}

TEST_CASE("intersects uses the closed-set convention") {
    CHECK(nfl::intersects(rect2(0, 0, 1, 1), rect2(1, 1, 2, 2)));  // shared corner
    CHECK_FALSE(nfl::intersects(rect2(0, 0, 1, 1), rect2(1.001, 1.001, 2, 2)));
    CHECK_FALSE(nfl::union_intersects(RectUnion{}, rect2(0, 0, 1, 1)));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto mk = [&] {
            double a = coord(rng), b = coord(rng), c = coord(rng), d = coord(rng);
            return rect2(std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d));
        };
        const auto r1 = mk(), r2m = mk();
        CHECK(nfl::intersects(r1, r2m) == nfl::intersects(r2m, r1));
    }
}

TEST_CASE("volume and membership") {
    CHECK(nfl::volume(rect2(0, 0, 2, 0.5)) == doctest::Approx(1.0));
    CHECK(nfl::volume(rect2(0.5, 0.5, 0.5, 0.5)) == 0.0);

    const auto unit = rect2(0, 0, 1, 1);
    CHECK(nfl::contains(unit, Eigen::Vector2d(1.0 + 5e-10, 0.5)));
    CHECK_FALSE(nfl::contains(unit, Eigen::Vector2d(1.0 + 5e-9, 0.5)));

    // contains implies intersects with the point rectangle
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Vector2d x(coord(rng), coord(rng));
        if (nfl::contains(unit, x, 0.0)) {
            CHECK(nfl::intersects(unit, HyperRectangle(x, x)));
        }
    }
}

TEST_CASE("intersection and widening") {
    const auto a = rect2(0, 0, 2, 2), b = rect2(1, 1, 3, 3);
    const auto ab = nfl::intersection(a, b);
    REQUIRE(ab);
    CHECK(ab->lo == Eigen::Vector2d(1, 1));
    CHECK(ab->hi == Eigen::Vector2d(2, 2));
    CHECK_FALSE(nfl::intersection(a, rect2(5, 5, 6, 6)));

    const auto w = nfl::widened(a, 0.5);
    CHECK(w.lo == Eigen::Vector2d(-0.5, -0.5));
    CHECK(w.hi == Eigen::Vector2d(2.5, 2.5));
}

TEST_CASE("json round trip") {
    const auto rect = rect2(-1.25, 0.5, 3.75, 0.5);
    nlohmann::json j = rect;
    const auto back = j.get<HyperRectangle>();
    CHECK(back.lo == rect.lo);
    CHECK(back.hi == rect.hi);

    RectUnion u({rect, rect2(0, 0, 1, 1)});
    nlohmann::json ju = u;
    const auto ub = ju.get<RectUnion>();
    REQUIRE(ub.size() == 2);
    CHECK(ub.members[0].lo == rect.lo);
}
