#include "twoview/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "twoview/errors.hpp"
#include "twoview/rng.hpp"

namespace twoview {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::CCA: return "cca";
        case ModelKind::CSWig: return "cswig";
        case ModelKind::CSWish: return "cswish";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "cca") return ModelKind::CCA;
    if (s == "cswig") return ModelKind::CSWig;
    if (s == "cswish") return ModelKind::CSWish;
    throw ValidationError("unknown model kind: " + s);
}

LimitModel LimitModel::cca(double tau_m, double tau_k) {
    LimitModel m;
    m.kind = ModelKind::CCA;
    m.tau_m = tau_m;
    m.tau_k = tau_k;
    return m;
}

LimitModel LimitModel::cswig(double alpha, double beta) {
    LimitModel m;
    m.kind = ModelKind::CSWig;
    m.alpha = alpha;
    m.beta = beta;
    m.tau = 1.0;
    return m;
}

LimitModel LimitModel::cswish(double alpha, double beta, double tau) {
    LimitModel m;
    m.kind = ModelKind::CSWish;
    m.alpha = alpha;
    m.beta = beta;
    m.tau = tau;
    return m;
}

ModelParams ModelParams::cca(int n, int m, int k, double rho) {
    ModelParams p;
    p.kind = ModelKind::CCA;
    p.n = n;
    p.m = m;
    p.k = k;
    p.rho = rho;
    p.validate();
    return p;
}

ModelParams ModelParams::cswig(int n, double alpha, double beta, double rho) {
    ModelParams p;
    p.kind = ModelKind::CSWig;
    p.n = n;
    p.alpha = alpha;
    p.beta = beta;
    p.rho = rho;
    p.validate();
    return p;
}

ModelParams ModelParams::cswish(int n, int m, double alpha, double beta, double rho) {
    ModelParams p;
    p.kind = ModelKind::CSWish;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    p.beta = beta;
    p.rho = rho;
    p.validate();
    return p;
}

void ModelParams::validate() const {
    if (rho < 0.0 || rho > 1.0) throw ValidationError("rho must lie in [0,1]");
    switch (kind) {
        case ModelKind::CCA:
            if (n < 2 || m < 2 || k < 2) throw ValidationError("CCA dimensions must be >= 2");
            break;
        case ModelKind::CSWig:
            if (n < 2) throw ValidationError("CSWig dimension must be >= 2");
            if (!(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0))
                throw ValidationError("CSWig needs 0 < alpha, beta <= 1 (single-view-uninformative regime)");
            break;
        case ModelKind::CSWish:
            if (n < 2 || m < 2) throw ValidationError("CSWish dimensions must be >= 2");
            if (!(alpha > 0.0 && beta > 0.0))
                throw ValidationError("CSWish needs positive alpha, beta");
            if (tau() * alpha * alpha > 1.0 || tau() * beta * beta > 1.0)
                throw ValidationError("CSWish needs tau*alpha^2, tau*beta^2 <= 1 (single-view-uninformative regime)");
            break;
    }
}

LimitModel ModelParams::limit() const {
    switch (kind) {
        case ModelKind::CCA: return LimitModel::cca(tau_m(), tau_k());
        case ModelKind::CSWig: return LimitModel::cswig(alpha, beta);
        case ModelKind::CSWish: return LimitModel::cswish(alpha, beta, tau());
    }
    return {};
}

namespace {

Vector gaussian_vector(rng::Stream& st, int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = st.normal();
    return v;
}

Vector unit_sphere(rng::Stream& st, int dim) {
    Vector v = gaussian_vector(st, dim);
    return v / v.norm();
}

// correlated spike pair: sqrt(dim)*a, sqrt(dim)*b standard normal with
// dim*E[a b^T] = rho*I
void correlated_spikes(rng::Stream& st, int dim, double rho, Vector& a, Vector& b) {
    Vector g = gaussian_vector(st, dim);
    Vector h = gaussian_vector(st, dim);
    double c = std::sqrt(1.0 - rho * rho);
    double inv = 1.0 / std::sqrt(static_cast<double>(dim));
    a = g * inv;
    b = (rho * g + c * h) * inv;
}

Matrix goe(rng::Stream& st, int n) {
    Matrix z(n, n);
    double off = 1.0 / std::sqrt(static_cast<double>(n));
    double diag = std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
        z(i, i) = diag * st.normal();
        for (int j = i + 1; j < n; ++j) {
            double x = off * st.normal();
            z(i, j) = x;
            z(j, i) = x;
        }
    }
    return z;
}

Matrix iid_gaussian(rng::Stream& st, int rows, int cols, double sigma) {
    Matrix z(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) z(i, j) = sigma * st.normal();
    return z;
}

// m += coef * a a^T with bitwise-identical (i,j) and (j,i) entries
void add_symmetric_rank1(Matrix& m, double coef, const Vector& a) {
    const int n = static_cast<int>(a.size());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = m(i, j) + coef * (a(i) * a(j));
            m(i, j) = v;
            m(j, i) = v;
        }
}

TwoViewInstance sample_cca(const ModelParams& p, bool planted, std::uint64_t seed) {
    TwoViewInstance inst;
    inst.params = p;
    inst.seed = seed;

    rng::Stream sa(seed, "cca.a"), sb(seed, "cca.b"), rows(seed, "cca.rows");
    Vector a = unit_sphere(sa, p.m);
    Vector b = unit_sphere(sb, p.k);
    double rho = planted ? p.rho : 0.0;
    double c = std::sqrt(1.0 - rho * rho);

    inst.U = Matrix(p.n, p.m);
    inst.V = Matrix(p.n, p.k);
    double im = 1.0 / std::sqrt(static_cast<double>(p.m));
    double ik = 1.0 / std::sqrt(static_cast<double>(p.k));
    // Conditional-Gaussian rows: sqrt(m) U_i = g and
    // sqrt(k) V_i = rho<a,g> b + (I - (1-c) b b^T) h, which keeps both
    // marginals standard and gives E[sqrt(mk) U_i V_i^T] = rho a b^T.
    for (int i = 0; i < p.n; ++i) {
        Vector g = gaussian_vector(rows, p.m);
        Vector h = gaussian_vector(rows, p.k);
        double ag = a.dot(g);
        Vector w = rho * ag * b + h - (1.0 - c) * b.dot(h) * b;
        inst.U.row(i) = (g * im).transpose();
        inst.V.row(i) = (w * ik).transpose();
    }
    if (planted) inst.planted = PlantedTruth{a, b, Vector(), Vector()};
    return inst;
}

TwoViewInstance sample_cswig(const ModelParams& p, bool planted, std::uint64_t seed) {
    TwoViewInstance inst;
    inst.params = p;
    inst.seed = seed;

    rng::Stream sza(seed, "wig.Za"), szb(seed, "wig.Zb");
    inst.U = goe(sza, p.n);
    inst.V = goe(szb, p.n);
    if (planted) {
        rng::Stream sp(seed, "wig.ab");
        Vector a, b;
        correlated_spikes(sp, p.n, p.rho, a, b);
        add_symmetric_rank1(inst.U, p.alpha, a);
        add_symmetric_rank1(inst.V, p.beta, b);
        inst.planted = PlantedTruth{a, b, Vector(), Vector()};
    }
    return inst;
}

TwoViewInstance sample_cswish(const ModelParams& p, bool planted, std::uint64_t seed) {
    TwoViewInstance inst;
    inst.params = p;
    inst.seed = seed;

    double sigma = 1.0 / std::sqrt(static_cast<double>(p.m));
    rng::Stream sza(seed, "wish.Za"), szb(seed, "wish.Zb");
    inst.U = iid_gaussian(sza, p.n, p.m, sigma);
    inst.V = iid_gaussian(szb, p.n, p.m, sigma);
    if (planted) {
        rng::Stream sp(seed, "wish.ab"), suv(seed, "wish.uv");
        Vector a, b;
        correlated_spikes(sp, p.m, p.rho, a, b);
        Vector u = gaussian_vector(suv, p.n);
        Vector v = gaussian_vector(suv, p.n);
        inst.U.noalias() += std::sqrt(p.alpha / p.m) * u * a.transpose();
        inst.V.noalias() += std::sqrt(p.beta / p.m) * v * b.transpose();
        inst.planted = PlantedTruth{a, b, u, v};
    }
    return inst;
}

}  // namespace

TwoViewInstance sample_instance(const ModelParams& params, bool planted, std::uint64_t seed) {
    params.validate();
    switch (params.kind) {
        case ModelKind::CCA: return sample_cca(params, planted, seed);
        case ModelKind::CSWig: return sample_cswig(params, planted, seed);
        case ModelKind::CSWish: return sample_cswish(params, planted, seed);
    }
    throw ValidationError("unknown model kind");
}

void save_matrix_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path + " for writing");
    out << m.rows() << "," << m.cols() << "\n";
    char buf[40];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << (j + 1 < m.cols() ? "," : "");
        }
        out << "\n";
    }
}

Matrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty matrix file " + path);
    int rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "%d,%d", &rows, &cols) != 2 || rows < 1 || cols < 1)
        throw ValidationError("bad matrix header in " + path);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw ValidationError("truncated matrix file " + path);
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < cols; ++j) {
            if (!std::getline(ss, cell, ',')) throw ValidationError("short row in " + path);
            m(i, j) = std::stod(cell);
        }
    }
    return m;
}

}  // namespace twoview
