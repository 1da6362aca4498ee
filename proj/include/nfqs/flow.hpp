#pragma once

#include <span>
#include <vector>

#include "nfqs/cplx.hpp"
#include "nfqs/qcnf.hpp"
#include "nfqs/qnvp.hpp"
#include "nfqs/rng.hpp"

namespace nfqs {

enum class FlowKind { kQnvp, kQcnf };

// One wavefunction: architecture descriptor plus a flat parameter vector.
struct FlowModel {
  FlowKind kind = FlowKind::kQnvp;
  QnvpArch qnvp;
  QcnfArch qcnf;
  std::vector<double> params;

  int n_dof() const { return kind == FlowKind::kQnvp ? qnvp.n_dof : qcnf.n_dof; }
  int n_params() const {
    return kind == FlowKind::kQnvp ? qnvp.param_count() : qcnf.param_count();
  }
  void validate() const {
    if (kind == FlowKind::kQnvp)
      qnvp.validate();
    else
      qcnf.validate();
    if (static_cast<int>(params.size()) != n_params())
      throw ConfigError("FlowModel: parameter vector size mismatch");
  }
};

FlowModel make_qnvp_model(int n_dof, int depth, int hidden_width = 32);
FlowModel make_qcnf_model(int n_dof, int hidden_width = 32, int n_steps = 16);

// Uniform [-scale, scale] weights everywhere; scale <= 0 picks the
// architecture default (1/(d N) for couplings, 0.1 for the vector field).
void init_flow_params(FlowModel& m, double scale, Rng& rng);

struct PsiEval {
  std::vector<double> x, y;
  double log_abs = 0.0;
  double phase = 0.0;
  double log_det = 0.0;
};

struct SampleBatch {
  int n = 0;
  int n_dof = 0;
  std::vector<double> x, y;  // row-major n x n_dof
  std::vector<double> log_abs, phase;

  std::span<const double> xi(int i) const {
    return std::span<const double>(x).subspan(i * n_dof, n_dof);
  }
  std::span<const double> yi(int i) const {
    return std::span<const double>(y).subspan(i * n_dof, n_dof);
  }
};

PsiEval psi_forward(const FlowModel& m, std::span<const double> y);

// Evaluate psi at a given configuration (layer inversion for QNVP, backward
// integration for QCNF).
PsiEval psi_at(const FlowModel& m, std::span<const double> x);
Cplx<double> psi_value_at(const FlowModel& m, std::span<const double> x);

// Draws i.i.d. base normals and maps them; exact samples from |psi|^2.
SampleBatch sample_batch(const FlowModel& m, int n, Rng& rng);

// |analytic logdet - finite-difference Jacobian logdet| at y (N <= 8).
double qnvp_logdet_discrepancy(const FlowModel& m, std::span<const double> y,
                               double fd_step = 1e-6);

// log det J(1) from the full Jacobian ODE dJ/dt = H J integrated with the
// same RK4 discretization (QCNF validation utility; N small).
double qcnf_logdet_jacobian_ode(const FlowModel& m, std::span<const double> y);

// d log|psi(f(y))| / d params at fixed base point (reverse mode through the
// discrete map). Exercises the exact training path.
std::vector<double> flow_logabs_param_grad(const FlowModel& m,
                                           std::span<const double> y);

// Pointwise (u, du/dx_c, d2u/dx_c^2) and the same for the phase.
struct PointDerivs {
  double u = 0, u1 = 0, u2 = 0;
  double phi = 0, phi1 = 0, phi2 = 0;
  std::vector<double> y;
};
PointDerivs psi_point_derivs(const FlowModel& m, std::span<const double> x,
                             int coord);

}  // namespace nfqs
