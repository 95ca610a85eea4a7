#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "nfl/dynamics.hpp"
#include "nfl/experiments.hpp"
#include "nfl/geometry.hpp"

using nfl::LinearSystem;

namespace {

LinearSystem offset_system() {
    LinearSystem sys = nfl::double_integrator_system();
    sys.c = Eigen::Vector2d(0.3, -0.7);
    return sys;
}

}  // namespace

TEST_CASE("step matches the affine map") {
    const LinearSystem di = nfl::double_integrator_system();
    CHECK(nfl::step(di, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1)) == Eigen::Vector2d(0, 0));
    CHECK(nfl::step(di, Eigen::Vector2d(1, 1), Eigen::VectorXd::Ones(1)) == Eigen::Vector2d(2.5, 2.0));

    const LinearSystem gr = nfl::ground_robot_system();
    CHECK(nfl::step(gr, Eigen::Vector2d(-5, 0), Eigen::Vector2d(1, 0)) == Eigen::Vector2d(-4, 0));

    CHECK_THROWS_AS(nfl::step(di, Eigen::Vector3d(0, 0, 0), Eigen::VectorXd::Zero(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(nfl::step(di, Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(2)),
                    std::invalid_argument);
}

TEST_CASE("step is affine in (x, u)") {
    const LinearSystem sys = offset_system();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Vector2d x1(coord(rng), coord(rng)), x2(coord(rng), coord(rng));
        Eigen::VectorXd u1 = Eigen::VectorXd::Constant(1, coord(rng));
        Eigen::VectorXd u2 = Eigen::VectorXd::Constant(1, coord(rng));
        const Eigen::VectorXd lhs =
            nfl::step(sys, x1 + x2, u1 + u2) - nfl::step(sys, x1, u1) - nfl::step(sys, x2, u2);
        CHECK((lhs + sys.c).norm() == doctest::Approx(0.0).epsilon(1e-12));
        // the zero-input step is exactly the exogenous offset
        CHECK(nfl::step(sys, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1)) == sys.c);
    }
}

TEST_CASE("simulate_closed_loop") {
    const LinearSystem gr = nfl::ground_robot_system();

    SUBCASE("horizon zero") {
        const auto traj = nfl::simulate_closed_loop(gr, [](const Eigen::VectorXd& x) { return x; },
                                                    Eigen::Vector2d(1, 2), 0);
        REQUIRE(traj.states.size() == 1);
        CHECK(traj.controls.empty());
        CHECK(traj.states[0] == Eigen::Vector2d(1, 2));
    }

    SUBCASE("transitions re-verified by step, controls recorded verbatim") {
        const LinearSystem di = offset_system();
        auto policy = [](const Eigen::VectorXd& x) {
            return Eigen::VectorXd::Constant(1, 0.25 * x[0] - x[1]);
        };
        const auto traj = nfl::simulate_closed_loop(di, policy, Eigen::Vector2d(2, -1), 3);
        REQUIRE(traj.states.size() == 4);
        REQUIRE(traj.controls.size() == 3);
        for (size_t t = 0; t < traj.controls.size(); ++t) {
            CHECK(traj.controls[t] == policy(traj.states[t]));
            const Eigen::VectorXd expect = nfl::step(di, traj.states[t], traj.controls[t]);
            const double rel = (traj.states[t + 1] - expect).norm() / (1.0 + expect.norm());
            CHECK(rel <= 1e-12);
        }
    }

    SUBCASE("markov property") {
        auto policy = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(-0.1 * x[0], 0.2); };
        const auto full = nfl::simulate_closed_loop(gr, policy, Eigen::Vector2d(3, -2), 6);
        const auto suffix = nfl::simulate_closed_loop(gr, policy, full.states[2], 4);
        for (int k = 0; k <= 4; ++k) {
            CHECK(full.states[static_cast<size_t>(2 + k)] == suffix.states[static_cast<size_t>(k)]);
        }
    }

    SUBCASE("avoidance field passes above the obstacle") {
        const auto target =
            nfl::HyperRectangle::from_center_radius(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
        const auto traj = nfl::simulate_closed_loop(
            gr, [](const Eigen::VectorXd& x) { return nfl::vector_field(x); },
            Eigen::Vector2d(-5, 1), 9);
        double max_py = -1e9;
        for (const auto& x : traj.states) {
            CHECK_FALSE(nfl::contains(target, x, 0.0));
            max_py = std::max(max_py, x[1]);
        }
        CHECK(max_py > 1.0);
    }
}

TEST_CASE("system validation and serialization") {
    LinearSystem sys = nfl::double_integrator_system();
    CHECK_NOTHROW(nfl::validate_system(sys));

    LinearSystem bad = sys;
    bad.control_lo[0] = 2.0;  // above control_hi
    CHECK_THROWS_AS(nfl::validate_system(bad), std::invalid_argument);

    bad = sys;
    bad.c = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(nfl::validate_system(bad), std::invalid_argument);

    const auto path = (std::filesystem::temp_directory_path() / "nfl_sys_roundtrip.json").string();
    nfl::save_system(sys, path);
    const LinearSystem back = nfl::load_system(path);
    CHECK(back.A == sys.A);
    CHECK(back.B == sys.B);
    CHECK(back.c == sys.c);
    CHECK(back.control_lo == sys.control_lo);
    CHECK(back.control_hi == sys.control_hi);
    std::filesystem::remove(path);
}
