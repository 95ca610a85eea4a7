#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nfl/backreach.hpp"
#include "nfl/experiments.hpp"
#include "nfl/oracle.hpp"
#include "test_oracles.hpp"

using nfl::BackreachOptions;
using nfl::BackreachResult;
using nfl::HyperRectangle;
using nfl::LinearSystem;
using nfl::NeuralNetwork;

namespace {

NeuralNetwork constant_policy(int nx, const Eigen::VectorXd& u) {
    NeuralNetwork nn;
    nn.layers.push_back({Eigen::MatrixXd::Zero(u.size(), nx), u, nfl::Activation::Identity});
    return nn;
}

// Random policy whose output is clamped to the control box, so the sampled
// closed loop honours the control limits the backreachable set assumes.
NeuralNetwork clamped_random_policy(const LinearSystem& sys, uint64_t seed) {
    std::vector<int> widths = {sys.nx(), 4, 4, sys.nu()};
    return nfl::append_output_clamp(oracles::random_network(widths, seed, 0.7),
                                    sys.control_lo, sys.control_hi);
}

BackreachOptions opts_r(int a, int b) {
    BackreachOptions o;
    o.r = Eigen::Vector2i(a, b);
    return o;
}

const HyperRectangle kDiTarget(Eigen::Vector2d(4.5, -0.25), Eigen::Vector2d(5.0, 0.25));

bool rect_inside(const HyperRectangle& inner, const HyperRectangle& outer, double slack) {
    return (inner.lo.array() >= outer.lo.array() - slack).all() &&
           (inner.hi.array() <= outer.hi.array() + slack).all();
}

}  // namespace

TEST_CASE("backreach_rect analytic cases") {
    SUBCASE("ground robot target expands by the control box") {
        const LinearSystem gr = nfl::ground_robot_system();
        const auto target = HyperRectangle::from_center_radius(Eigen::Vector2d::Zero(),
                                                               Eigen::Vector2d(1, 1));
        long count = 0;
        const auto rect = nfl::backreach_rect(gr, target, &count);
        REQUIRE(rect);
        CHECK(count == 4);
        for (int k = 0; k < 2; ++k) {
            CHECK(rect->lo[k] == doctest::Approx(-2.0).epsilon(1e-6));
            CHECK(rect->hi[k] == doctest::Approx(2.0).epsilon(1e-6));
        }
    }

    SUBCASE("pinned control and point target force a point") {
        LinearSystem di = nfl::double_integrator_system();
        di.control_lo.setZero();
        di.control_hi.setZero();
        const HyperRectangle point(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero());
        const auto rect = nfl::backreach_rect(di, point);
        REQUIRE(rect);
        CHECK(rect->lo.cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(rect->hi.cwiseAbs().maxCoeff() <= 1e-6);
    }

    SUBCASE("unreachable target is an empty-set signal") {
        // next state = u + (5,5) with |u| <= 1 can never land on the origin
        LinearSystem stuck = nfl::ground_robot_system();
        stuck.A = Eigen::MatrixXd::Zero(2, 2);
        stuck.c = Eigen::Vector2d(5, 5);
        const auto origin = HyperRectangle(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0));
        CHECK_FALSE(nfl::backreach_rect(stuck, origin));
    }

    SUBCASE("double integrator faces match the grid oracle") {
        const LinearSystem di = nfl::double_integrator_system();
        const auto rect = nfl::backreach_rect(di, kDiTarget);
        REQUIRE(rect);
        const HyperRectangle box(Eigen::Vector3d(2, -2, -1), Eigen::Vector3d(7, 2, 1));
        auto feasible = [&](const Eigen::VectorXd& z) {
            const Eigen::Vector2d next = di.A * z.head<2>() + di.B * z.tail<1>();
            return nfl::contains(kDiTarget, next, 0.0);
        };
        for (int k = 0; k < 2; ++k) {
            const double hi_oracle = oracles::grid_max(
                box, 100, feasible, [k](const Eigen::VectorXd& z) { return z[k]; });
            const double lo_oracle = -oracles::grid_max(
                box, 100, feasible, [k](const Eigen::VectorXd& z) { return -z[k]; });
            CHECK(std::abs(rect->hi[k] - hi_oracle) <= 2e-3);
            CHECK(std::abs(rect->lo[k] - lo_oracle) <= 2e-3);
        }
    }
}

TEST_CASE("one_step_backproj") {
    const LinearSystem gr = nfl::ground_robot_system();
    const auto target = HyperRectangle::from_center_radius(Eigen::Vector2d::Zero(),
                                                           Eigen::Vector2d(1, 1));

    SUBCASE("zero policy reproduces the target exactly") {
        const NeuralNetwork zero = constant_policy(2, Eigen::Vector2d::Zero());
        const auto res = nfl::one_step_backproj(gr, zero, target, opts_r(2, 2));
        REQUIRE_FALSE(res.bp.empty());
        const auto hull = nfl::bound_with_rectangle(res.bp);
        REQUIRE(hull);
        CHECK((hull->lo - target.lo).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((hull->hi - target.hi).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(res.lp_solves == 2 * 2 * 4);
        CHECK(res.backreach_lp_solves == 4);
    }

    SUBCASE("members stay inside the backreachable rectangle") {
        const NeuralNetwork policy = clamped_random_policy(gr, 11);
        const auto res = nfl::one_step_backproj(gr, policy, target, opts_r(3, 2));
        REQUIRE(res.backreach);
        for (const auto& m : res.bp.members) CHECK(rect_inside(m, *res.backreach, 1e-9));
    }

    SUBCASE("exists-soundness against a membership oracle") {
        const LinearSystem di = nfl::double_integrator_system();
        const NeuralNetwork policy = clamped_random_policy(di, 29);
        const auto res = nfl::one_step_backproj(di, policy, kDiTarget, opts_r(4, 4));
        REQUIRE(res.backreach);
        std::mt19937_64 rng(500);
        long hits = 0;
        for (long i = 0; i < 20000; ++i) {
            Eigen::Vector2d x;
            for (int k = 0; k < 2; ++k) {
                x[k] = res.backreach->lo[k] +
                       (res.backreach->hi[k] - res.backreach->lo[k]) *
                           std::uniform_real_distribution<double>(0, 1)(rng);
            }
            if (nfl::contains(kDiTarget, nfl::step(di, x, nfl::forward(policy, x)), 0.0)) {
                ++hits;
                CHECK(nfl::union_contains(res.bp, x));
            }
        }
        CHECK(hits > 0);  // the oracle actually exercised membership
    }
}

TEST_CASE("breach_lp") {
    const LinearSystem di = nfl::double_integrator_system();
    const NeuralNetwork policy = clamped_random_policy(di, 3);

    SUBCASE("tau=1 reduces to one_step_backproj") {
        const auto one = nfl::one_step_backproj(di, policy, kDiTarget, opts_r(2, 2));
        const auto res = nfl::breach_lp(di, policy, kDiTarget, 1, opts_r(2, 2));
        REQUIRE(res.bp_sets.size() == 2);
        CHECK(res.bp_sets[0].members.size() == 1);
        REQUIRE(res.bp_sets[1].members.size() == one.bp.members.size());
        for (size_t i = 0; i < one.bp.members.size(); ++i) {
            CHECK(res.bp_sets[1].members[i].lo == one.bp.members[i].lo);
            CHECK(res.bp_sets[1].members[i].hi == one.bp.members[i].hi);
        }
    }

    SUBCASE("lp accounting identities") {
        const auto res = nfl::breach_lp(di, policy, kDiTarget, 3, opts_r(2, 2));
        CHECK(res.lp_solves == 2 * 2 * 4 * 3);
        CHECK(res.backreach_lp_solves == 2 * 2 * 3);
        REQUIRE(res.omega.size() == 3);
        for (const auto& om : res.omega) CHECK(om.has_value());
    }

    SUBCASE("rollout soundness and hull structure") {
        const auto res = nfl::breach_lp(di, policy, kDiTarget, 3, opts_r(3, 3));
        const auto audit = nfl::soundness_audit(res, di, policy, kDiTarget, 20000, 7);
        CHECK(audit.checked > 0);
        CHECK(audit.violations == 0);

        // members inside the per-step backreachable rectangle
        for (size_t t = 1; t < res.bp_sets.size(); ++t) {
            REQUIRE(res.backreach_rects[t]);
            for (const auto& m : res.bp_sets[t].members)
                CHECK(rect_inside(m, *res.backreach_rects[t], 1e-9));
        }
    }

    SUBCASE("deterministic bit-for-bit") {
        const auto a = nfl::breach_lp(di, policy, kDiTarget, 2, opts_r(2, 2));
        const auto b = nfl::breach_lp(di, policy, kDiTarget, 2, opts_r(2, 2));
        REQUIRE(a.bp_sets.size() == b.bp_sets.size());
        for (size_t t = 0; t < a.bp_sets.size(); ++t) {
            REQUIRE(a.bp_sets[t].members.size() == b.bp_sets[t].members.size());
            for (size_t i = 0; i < a.bp_sets[t].members.size(); ++i) {
                CHECK(a.bp_sets[t].members[i].lo == b.bp_sets[t].members[i].lo);
                CHECK(a.bp_sets[t].members[i].hi == b.bp_sets[t].members[i].hi);
            }
        }
    }

    SUBCASE("early termination on an empty estimate") {
        // A policy pinned far from anything that reaches the target makes the
        // one-step set empty immediately.
        LinearSystem stuck = nfl::ground_robot_system();
        stuck.A = Eigen::MatrixXd::Zero(2, 2);
        const NeuralNetwork away = constant_policy(2, Eigen::Vector2d(0.0, 0.0));
        const auto target = HyperRectangle(Eigen::Vector2d(5, 5), Eigen::Vector2d(6, 6));
        // next state = u, and u is relaxed around 0, so the target at (5,6)^2
        // is unreachable: expect empty sets and early termination.
        const auto res = nfl::breach_lp(stuck, away, target, 3, opts_r(2, 2));
        CHECK(res.bp_sets[1].empty());
        CHECK(res.bp_sets[2].empty());
        CHECK(res.bp_sets[3].empty());
        CHECK_FALSE(res.hulls[1].has_value());
        const auto verdict = nfl::certify_safety(res, HyperRectangle(Eigen::Vector2d(0, 0),
                                                                     Eigen::Vector2d(1, 1)));
        CHECK(verdict.certified);
    }
}

TEST_CASE("rebreach_lp") {
    const LinearSystem di = nfl::double_integrator_system();
    const NeuralNetwork policy = clamped_random_policy(di, 3);

    SUBCASE("tau=1 is identical to breach_lp") {
        const auto b = nfl::breach_lp(di, policy, kDiTarget, 1, opts_r(2, 2));
        const auto rb = nfl::rebreach_lp(di, policy, kDiTarget, 1, opts_r(2, 2));
        CHECK(rb.lp_solves == b.lp_solves);
        REQUIRE(rb.bp_sets.size() == b.bp_sets.size());
        for (size_t i = 0; i < b.bp_sets[1].members.size(); ++i) {
            CHECK(rb.bp_sets[1].members[i].lo == b.bp_sets[1].members[i].lo);
            CHECK(rb.bp_sets[1].members[i].hi == b.bp_sets[1].members[i].hi);
        }
    }

    SUBCASE("containment, accounting and soundness") {
        const int tau = 4;
        const auto breach = nfl::breach_lp(di, policy, kDiTarget, tau, opts_r(2, 2));
        const auto refined = nfl::rebreach_lp(di, policy, kDiTarget, tau, opts_r(2, 2));

        CHECK(refined.lp_solves == 2 * 2 * 4 * (2 * tau - 1));
        CHECK(refined.backreach_lp_solves == breach.backreach_lp_solves);

        for (int t = 1; t <= tau; ++t) {
            if (!breach.hulls[static_cast<size_t>(t)]) continue;
            REQUIRE(refined.hulls[static_cast<size_t>(t)]);
            CHECK(rect_inside(*refined.hulls[static_cast<size_t>(t)],
                              *breach.hulls[static_cast<size_t>(t)], 1e-9));
        }

        const auto audit = nfl::soundness_audit(refined, di, policy, kDiTarget, 20000, 7);
        CHECK(audit.violations == 0);

        // the copied first step matches breach exactly
        REQUIRE(refined.bp_sets[1].members.size() == breach.bp_sets[1].members.size());
        for (size_t i = 0; i < breach.bp_sets[1].members.size(); ++i)
            CHECK(refined.bp_sets[1].members[i].lo == breach.bp_sets[1].members[i].lo);
    }

    SUBCASE("single-step ablation still contains the truth") {
        BackreachOptions o = opts_r(2, 2);
        o.single_step_refinement = true;
        const auto refined = nfl::rebreach_lp(di, policy, kDiTarget, 3, o);
        const auto audit = nfl::soundness_audit(refined, di, policy, kDiTarget, 10000, 11);
        CHECK(audit.violations == 0);
        CHECK(refined.lp_solves == 2 * 2 * 4 * (2 * 3 - 1));
    }
}

TEST_CASE("reach_forward") {
    SUBCASE("zero policy on an identity system stays put") {
        const LinearSystem gr = nfl::ground_robot_system();
        const NeuralNetwork zero = constant_policy(2, Eigen::Vector2d::Zero());
        const auto init = HyperRectangle(Eigen::Vector2d(2, 2), Eigen::Vector2d(3, 3));
        const auto res = nfl::reach_forward(gr, zero, init, 4, opts_r(2, 2));
        REQUIRE(res.sets.size() == 5);
        for (size_t t = 1; t < res.sets.size(); ++t) {
            const auto hull = nfl::bound_with_rectangle(res.sets[t]);
            REQUIRE(hull);
            CHECK((hull->lo - init.lo).cwiseAbs().maxCoeff() <= 1e-5);
            CHECK((hull->hi - init.hi).cwiseAbs().maxCoeff() <= 1e-5);
        }
        CHECK(res.lp_solves == 4 * 2 * 2 * 4);
    }

    SUBCASE("rollouts stay inside the forward sets") {
        const LinearSystem di = nfl::double_integrator_system();
        const NeuralNetwork policy = clamped_random_policy(di, 77);
        const auto init = HyperRectangle(Eigen::Vector2d(1, -0.5), Eigen::Vector2d(2, 0.5));
        const int tau = 4;
        const auto res = nfl::reach_forward(di, policy, init, tau, opts_r(3, 3));
        std::mt19937_64 rng(321);
        for (int s = 0; s < 1000; ++s) {
            Eigen::Vector2d x(init.lo[0] + (init.hi[0] - init.lo[0]) *
                                               std::uniform_real_distribution<double>(0, 1)(rng),
                              init.lo[1] + (init.hi[1] - init.lo[1]) *
                                               std::uniform_real_distribution<double>(0, 1)(rng));
            for (int t = 1; t <= tau; ++t) {
                x = nfl::step(di, x, nfl::forward(policy, x));
                CHECK(nfl::union_contains(res.sets[static_cast<size_t>(t)], x));
            }
        }
    }
}

TEST_CASE("certify_safety") {
    const auto x0 = HyperRectangle(Eigen::Vector2d(-6, -1), Eigen::Vector2d(-4, 1));

    BackreachResult empty;
    empty.bp_sets.push_back(nfl::RectUnion({HyperRectangle(Eigen::Vector2d(0, 0),
                                                           Eigen::Vector2d(1, 1))}));
    empty.bp_sets.emplace_back();
    empty.bp_sets.emplace_back();
    CHECK(nfl::certify_safety(empty, x0).certified);

    BackreachResult unsafe = empty;
    unsafe.bp_sets[2].members.push_back(HyperRectangle(Eigen::Vector2d(-5, 0),
                                                       Eigen::Vector2d(-4.5, 0.5)));
    const auto verdict = nfl::certify_safety(unsafe, x0);
    CHECK_FALSE(verdict.certified);
    REQUIRE(verdict.first_unsafe_step);
    CHECK(*verdict.first_unsafe_step == 2);
    REQUIRE(verdict.witness);
    CHECK(verdict.witness->lo == Eigen::Vector2d(-5, 0));
}
