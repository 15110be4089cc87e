#include "jflow/geometry.hpp"

#include <sstream>

#include "jflow/errors.hpp"

namespace jflow {

ScalarField wedge2(const HermitianFormField& a) {
    ScalarField out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = 2.0 * a.det_at(i);
    return out;
}

ScalarField wedge11(const HermitianFormField& a, const HermitianFormField& b) {
    require_same_grid(a.grid(), b.grid(), "wedge11");
    ScalarField out(a.grid());
    auto a11 = a.a11(), a22 = a.a22(), ar = a.re12(), ai = a.im12();
    auto b11 = b.a11(), b22 = b.a22(), br = b.re12(), bi = b.im12();
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a11[i] * b22[i] + a22[i] * b11[i] - 2.0 * (ar[i] * br[i] + ai[i] * bi[i]);
    return out;
}

double integrate(const ScalarField& s) { return s.mean(); }

double topological_constant(const HermitianFormField& chi, const HermitianFormField& omega) {
    require_same_grid(chi.grid(), omega.grid(), "topological_constant");
    const double chi2 = integrate(wedge2(chi));
    if (!(chi2 > 0.0))
        throw DegenerateClassError("topological_constant: [chi]^2 must be positive");
    return 2.0 * integrate(wedge11(chi, omega)) / chi2;
}

double topological_constant(const ClassVector& chi, const ClassVector& omega) {
    const double chi2 = wedge2_const(chi);
    if (!(chi2 > 0.0))
        throw DegenerateClassError("topological_constant: [chi]^2 must be positive");
    return 2.0 * wedge11_const(chi, omega) / chi2;
}

ScalarField min_eigenvalue_field(const HermitianFormField& a) {
    ScalarField out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.min_eig_at(i);
    return out;
}

ScalarField trace_with(const HermitianFormField& metric, const HermitianFormField& a) {
    require_same_grid(metric.grid(), a.grid(), "trace_with");
    ScalarField out(a.grid());
    auto m11 = metric.a11(), m22 = metric.a22(), mr = metric.re12(), mi = metric.im12();
    auto b11 = a.a11(), b22 = a.a22(), br = a.re12(), bi = a.im12();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double det = m11[i] * m22[i] - (mr[i] * mr[i] + mi[i] * mi[i]);
        if (!(m11[i] > 0.0) || !(det > 0.0)) {
            std::ostringstream msg;
            msg << "trace_with: metric not positive definite at node " << i;
            throw SingularMetricError(msg.str());
        }
        out[i] = (m11[i] * b22[i] + m22[i] * b11[i] - 2.0 * (mr[i] * br[i] + mi[i] * bi[i])) / det;
    }
    return out;
}

} // namespace jflow
