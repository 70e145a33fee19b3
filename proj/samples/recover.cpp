// Recovers one random sparse signal with ICR and with the elastic net and
// prints how each one scores against the ground truth.

#include "icr/icr.hpp"

#include <cstdio>

int main() {
  const icr::SynthInstance si = icr::generate_instance(256, 96, 12, 0.01, icr::PriorHyper{}, 42);

  icr::IcrOptions opts;
  opts.record_trace = true;
  const icr::IcrResult r = icr::icr_run(si.inst, opts);
  const icr::SubproblemSolution en = icr::elastic_net(si.inst);

  const double tau = 1e-6;
  std::printf("%-11s %12s %12s %8s %9s\n", "method", "cost", "mse", "SM(%)", "sparsity");
  std::printf("%-11s %12.5e %12.5e %8.2f %9ld\n", "ICR", icr::map_objective(si.inst, r.x_star), icr::mse(r.x_star, si.x0),
              icr::support_match(r.x_star, si.x0, tau), static_cast<long>(icr::sparsity_level(r.x_star, tau)));
  std::printf("%-11s %12.5e %12.5e %8.2f %9ld\n", "ElasticNet", icr::map_objective(si.inst, en.x), icr::mse(en.x, si.x0),
              icr::support_match(en.x, si.x0, tau), static_cast<long>(icr::sparsity_level(en.x, tau)));

  const icr::ConvergenceReport qc = icr::quasi_cauchy_check(*r.trace);
  std::printf("\n%d outer iterations (%s), quasi-Cauchy check %s, c' = %.3g\n", r.iterations,
              r.converged ? "converged" : "iteration limit", qc.passed ? "passed" : "failed", qc.c_prime);
}
