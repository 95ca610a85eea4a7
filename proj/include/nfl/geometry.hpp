#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include <json.hpp>

namespace nfl {

// Slack used by membership queries. LP optima carry solver round-off, so
// point-in-set checks must not report spurious boundary violations.
inline constexpr double kMembershipTol = 1e-9;

// Axis-aligned box lo <= x <= hi. Every set estimate in this project is a box
// or a finite union of boxes; an ell-infinity ball with center c and radius r
// is stored as [c - r, c + r].
struct HyperRectangle {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    HyperRectangle() = default;
    HyperRectangle(Eigen::VectorXd lo_, Eigen::VectorXd hi_);

    static HyperRectangle from_center_radius(const Eigen::VectorXd& center,
                                             const Eigen::VectorXd& radius);

    int dim() const { return static_cast<int>(lo.size()); }
    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
    Eigen::VectorXd radius() const { return 0.5 * (hi - lo); }
    Eigen::VectorXd widths() const { return hi - lo; }
    bool is_point() const { return lo == hi; }
};

// Finite union of same-dimension boxes, possibly overlapping. An empty member
// list denotes the empty set.
struct RectUnion {
    std::vector<HyperRectangle> members;

    RectUnion() = default;
    explicit RectUnion(std::vector<HyperRectangle> m) : members(std::move(m)) {}

    bool empty() const { return members.empty(); }
    size_t size() const { return members.size(); }
};

// Splits rect into prod(r) cells of equal per-dimension side length. Cells
// tile rect exactly: shared faces are computed once per dimension and the
// outermost edges reuse rect.lo / rect.hi verbatim.
std::vector<HyperRectangle> partition(const HyperRectangle& rect, const Eigen::VectorXi& r);

// Tightest axis-aligned superset of the union; nullopt for the empty union
// (callers treat that as "set empty, terminate").
std::optional<HyperRectangle> bound_with_rectangle(const RectUnion& u);

// Closed-set intersection: boundary contact counts (conservative for safety).
bool intersects(const HyperRectangle& a, const HyperRectangle& b);
bool union_intersects(const RectUnion& u, const HyperRectangle& b);

double volume(const HyperRectangle& rect);

bool contains(const HyperRectangle& rect, const Eigen::VectorXd& x, double tol = kMembershipTol);
bool union_contains(const RectUnion& u, const Eigen::VectorXd& x, double tol = kMembershipTol);

// Overlap box, or nullopt when disjoint.
std::optional<HyperRectangle> intersection(const HyperRectangle& a, const HyperRectangle& b);

HyperRectangle widened(const HyperRectangle& rect, double eps);

void to_json(nlohmann::json& j, const HyperRectangle& rect);
void from_json(const nlohmann::json& j, HyperRectangle& rect);
void to_json(nlohmann::json& j, const RectUnion& u);
void from_json(const nlohmann::json& j, RectUnion& u);

}  // namespace nfl
