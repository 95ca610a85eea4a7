#include "nfl/dynamics.hpp"

#include <fstream>
#include <stdexcept>

namespace nfl {

namespace {

std::vector<std::vector<double>> matrix_rows(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows()));
    for (long i = 0; i < m.rows(); ++i) {
        rows[static_cast<size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
    }
    return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows, const char* name) {
    if (rows.empty()) throw std::invalid_argument(std::string(name) + ": empty matrix");
    Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw std::invalid_argument(std::string(name) + ": ragged rows");
        for (size_t k = 0; k < rows[i].size(); ++k) m(static_cast<long>(i), static_cast<long>(k)) = rows[i][k];
    }
    return m;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

void validate_system(const LinearSystem& sys) {
    if (sys.A.rows() != sys.A.cols()) throw std::invalid_argument("LinearSystem: A must be square");
    if (sys.B.rows() != sys.A.rows()) throw std::invalid_argument("LinearSystem: B row count must match A");
    if (sys.c.size() != sys.A.rows()) throw std::invalid_argument("LinearSystem: c length must match A");
    if (sys.control_lo.size() != sys.B.cols() || sys.control_hi.size() != sys.B.cols())
        throw std::invalid_argument("LinearSystem: control limit length must match B columns");
    for (long k = 0; k < sys.control_lo.size(); ++k) {
        if (sys.control_lo[k] > sys.control_hi[k])
            throw std::invalid_argument("LinearSystem: control_lo > control_hi at dim " + std::to_string(k));
    }
}

Eigen::VectorXd step(const LinearSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    if (x.size() != sys.nx()) throw std::invalid_argument("step: state dimension mismatch");
    if (u.size() != sys.nu()) throw std::invalid_argument("step: control dimension mismatch");
    return sys.A * x + sys.B * u + sys.c;
}

Trajectory simulate_closed_loop(const LinearSystem& sys, const Policy& policy,
                                const Eigen::VectorXd& x0, int horizon) {
    if (horizon < 0) throw std::invalid_argument("simulate_closed_loop: horizon must be >= 0");
    Trajectory traj;
    traj.states.reserve(static_cast<size_t>(horizon) + 1);
    traj.controls.reserve(static_cast<size_t>(horizon));
    traj.states.push_back(x0);
    for (int t = 0; t < horizon; ++t) {
        Eigen::VectorXd u = policy(traj.states.back());
        traj.states.push_back(step(sys, traj.states.back(), u));
        traj.controls.push_back(std::move(u));
    }
    return traj;
}

void to_json(nlohmann::json& j, const LinearSystem& sys) {
    j = nlohmann::json{{"A", matrix_rows(sys.A)},
                       {"B", matrix_rows(sys.B)},
                       {"c", std::vector<double>(sys.c.begin(), sys.c.end())},
                       {"u_lo", std::vector<double>(sys.control_lo.begin(), sys.control_lo.end())},
                       {"u_hi", std::vector<double>(sys.control_hi.begin(), sys.control_hi.end())}};
}

void from_json(const nlohmann::json& j, LinearSystem& sys) {
    sys.A = rows_to_matrix(j.at("A").get<std::vector<std::vector<double>>>(), "A");
    sys.B = rows_to_matrix(j.at("B").get<std::vector<std::vector<double>>>(), "B");
    sys.c = to_vector(j.at("c").get<std::vector<double>>());
    sys.control_lo = to_vector(j.at("u_lo").get<std::vector<double>>());
    sys.control_hi = to_vector(j.at("u_hi").get<std::vector<double>>());
    validate_system(sys);
}

LinearSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open system file: " + path);
    nlohmann::json j;
    in >> j;
    return j.get<LinearSystem>();
}

void save_system(const LinearSystem& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write system file: " + path);
    out << nlohmann::json(sys).dump(2) << "\n";
}

}  // namespace nfl
