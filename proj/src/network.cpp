#include "memlif/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "memlif/csv.hpp"

namespace memlif {

Crossbar::Crossbar(std::size_t rows_, std::size_t cols_, double g_min_,
                   double g_max_)
    : rows(rows_), cols(cols_), conductance(rows_ * cols_, 0.0),
      gate(rows_, false), g_min(g_min_), g_max(g_max_) {}

double& Crossbar::at(std::size_t row, std::size_t col) {
    if (row >= rows || col >= cols)
        throw std::out_of_range("crossbar index out of range");
    return conductance[row * cols + col];
}

double Crossbar::at(std::size_t row, std::size_t col) const {
    if (row >= rows || col >= cols)
        throw std::out_of_range("crossbar index out of range");
    return conductance[row * cols + col];
}

std::vector<Violation> Crossbar::validate() const {
    std::vector<Violation> out;
    if (conductance.size() != rows * cols)
        out.push_back({"conductance", "matrix size does not match rows*cols"});
    if (gate.size() != rows)
        out.push_back({"gate", "gate vector length does not match rows"});
    if (!(g_min < g_max))
        out.push_back({"g_min", "device window requires g_min < g_max"});
    for (std::size_t i = 0; i < conductance.size(); ++i) {
        const double g = conductance[i];
        if (g == 0.0) continue; // unformed cell
        if (g < g_min || g > g_max) {
            std::ostringstream os;
            os << "cell " << i / cols << "," << i % cols << " = " << g
               << " outside window [" << g_min << ", " << g_max << "]";
            out.push_back({"conductance", os.str()});
        }
    }
    return out;
}

double column_current(const Crossbar& xbar, std::size_t col, double v_in,
                      double v_ref) {
    if (col >= xbar.cols)
        throw std::out_of_range("column_current: column index out of range");
    const double overdrive = std::max(0.0, v_in - v_ref);
    double sum = 0.0;
    for (std::size_t r = 0; r < xbar.rows; ++r)
        if (xbar.gate[r]) sum += overdrive * xbar.conductance[r * xbar.cols + col];
    return sum;
}

void spike_to_gates(Crossbar& xbar, const std::vector<bool>& spikes) {
    if (spikes.size() != xbar.rows)
        throw std::invalid_argument(
            "spike_to_gates: spike vector length does not match rows");
    xbar.gate = spikes;
}

double adaptive_threshold(const AdaptivePair& pair,
                          const NeuronState& regulator_state, double floor) {
    (void)pair;
    return std::max(floor, regulator_state.v_mem);
}

double vdsp_update(double g, double post_trace, const VdspParams& p) {
    if (g < p.g_min || g > p.g_max)
        throw std::invalid_argument("vdsp_update: g outside [g_min, g_max]");
    double g_new = g;
    if (post_trace < 0.0)
        g_new = g - p.eta_dep * (-post_trace) * (g - p.g_min);
    else if (post_trace > 0.0)
        g_new = g + p.eta_pot * post_trace * (p.g_max - g);
    return std::clamp(g_new, p.g_min, p.g_max);
}

double shared_regulator_current(const std::vector<std::size_t>& pool,
                                const std::vector<bool>& spiking,
                                double v_out, double v_ref,
                                double link_resistance) {
    if (pool.empty())
        throw std::invalid_argument("shared_regulator_current: empty pool");
    if (spiking.size() != pool.size())
        throw std::invalid_argument(
            "shared_regulator_current: spike flags do not match pool size");
    if (!(link_resistance > 0.0))
        throw std::invalid_argument(
            "shared_regulator_current: link resistance must be > 0");
    const double per_member = std::max(0.0, v_out - v_ref) / link_resistance;
    double total = 0.0;
    for (bool s : spiking)
        if (s) total += per_member;
    return total;
}

void save_crossbar_csv(const Crossbar& xbar, const std::string& path) {
    std::vector<std::string> lines;
    lines.reserve(xbar.rows);
    for (std::size_t r = 0; r < xbar.rows; ++r) {
        std::vector<std::string> fields;
        fields.reserve(xbar.cols);
        for (std::size_t c = 0; c < xbar.cols; ++c)
            fields.push_back(csv::format_double(xbar.at(r, c)));
        lines.push_back(csv::join(fields));
    }
    csv::write_lines(path, lines);
}

Crossbar load_crossbar_csv(const std::string& path, double g_min,
                           double g_max) {
    const auto rows = csv::read_table(path);
    if (rows.empty())
        throw std::runtime_error("crossbar csv is empty: " + path);
    Crossbar xbar(rows.size(), rows[0].size(), g_min, g_max);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != xbar.cols)
            throw std::runtime_error("crossbar csv is ragged at line " +
                                     std::to_string(r + 1));
        for (std::size_t c = 0; c < xbar.cols; ++c)
            xbar.at(r, c) = csv::parse_double(rows[r][c]);
    }
    return xbar;
}

} // namespace memlif
