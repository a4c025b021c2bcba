#include "semrom/pod.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace semrom {

ReducedBasis pod(const Eigen::MatrixXd& snapshots, double energy_fraction)
{
    if (snapshots.cols() < 1) throw std::invalid_argument("pod: no snapshots");
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw std::invalid_argument("pod: energy fraction must be in (0, 1]");
    if (snapshots.norm() == 0.0) throw std::invalid_argument("pod: all-zero snapshot matrix");

    const int ns = static_cast<int>(snapshots.cols());
    Eigen::MatrixXd gram = snapshots.transpose() * snapshots;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);

    // eigenvalues ascending; reorder descending
    Eigen::VectorXd sigma(ns);
    Eigen::MatrixXd vecs(ns, ns);
    for (int i = 0; i < ns; ++i) {
        sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(ns - 1 - i)));
        vecs.col(i) = eig.eigenvectors().col(ns - 1 - i);
    }

    double total = sigma.squaredNorm();
    int rank = 0;
    while (rank < ns && sigma(rank) > 1e-12 * sigma(0)) ++rank;

    int n = 0;
    double cum = 0.0;
    while (n < rank) {
        cum += sigma(n) * sigma(n);
        ++n;
        if (cum / total >= energy_fraction) break;
    }
    if (n == 0) n = 1;

    ReducedBasis basis;
    basis.singular_values = sigma;
    basis.n = n;
    basis.energy_fraction = energy_fraction;
    basis.u.resize(snapshots.rows(), n);
    for (int i = 0; i < n; ++i)
        basis.u.col(i) = snapshots * vecs.col(i) / sigma(i);
    // re-orthonormalize against roundoff in the Gram route
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.u);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(snapshots.rows(), n);
    Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    basis.u = q;
    return basis;
}

std::vector<DecayRow> pod_decay_report(const ReducedBasis& basis)
{
    std::vector<DecayRow> rows;
    double total = basis.singular_values.squaredNorm();
    double cum = 0.0;
    for (int i = 0; i < basis.singular_values.size(); ++i) {
        cum += basis.singular_values(i) * basis.singular_values(i);
        rows.push_back({i + 1, basis.singular_values(i), cum / total});
    }
    if (!rows.empty()) rows.back().cumulative_energy = 1.0;
    return rows;
}

void write_decay_csv(const std::vector<DecayRow>& rows, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "mode,sigma,cumulative_energy\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.mode << ',' << r.sigma << ',' << r.cumulative_energy << '\n';
}

void write_decay_svg(const std::vector<DecayRow>& rows, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    const double w = 640, h = 420, ml = 60, mb = 40, mt = 20, mr = 20;
    double smax = rows.empty() ? 1.0 : rows.front().sigma;
    double smin = smax;
    for (const auto& r : rows)
        if (r.sigma > 0.0) smin = std::min(smin, r.sigma);
    smin = std::max(smin, smax * 1e-16);
    double lmax = std::log10(smax), lmin = std::log10(smin);
    if (lmax - lmin < 1.0) lmin = lmax - 1.0;

    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
        << h - mb << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<text x='" << w / 2 << "' y='" << h - 8 << "' text-anchor='middle'>mode</text>\n";
    out << "<text x='14' y='" << h / 2 << "' transform='rotate(-90 14 " << h / 2
        << ")' text-anchor='middle'>singular value</text>\n";
    out << "<polyline fill='none' stroke='#06c' stroke-width='1.5' points='";
    int n = static_cast<int>(rows.size());
    for (int i = 0; i < n; ++i) {
        double sx = ml + (w - ml - mr) * (n == 1 ? 0.5 : double(i) / (n - 1));
        double ls = std::log10(std::max(rows[i].sigma, smin));
        double sy = h - mb - (h - mt - mb) * (ls - lmin) / (lmax - lmin);
        out << sx << ',' << sy << ' ';
    }
    out << "'/>\n</svg>\n";
}

} // namespace semrom
