#include "din/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "din/errors.hpp"

namespace din::ad {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(g.constant(p));
  return f(g, vars).value().item();
}

std::vector<Tensor> gradients(const ScalarFn& f, const std::vector<Tensor>& params) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(g.parameter(p));
  Var loss = f(g, vars);
  g.backward(loss);
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.grad());
  return out;
}

GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Tensor>& params,
                                  const GradCheckOptions& options, const std::vector<std::string>& names) {
  if (!(options.step > 0.0)) throw UsageError("finite_diff_check: step must be positive");
  const std::vector<Tensor> analytic = gradients(f, params);

  GradCheckReport report;
  std::vector<Tensor> work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckParam entry;
    entry.name = p < names.size() ? names[p] : "param" + std::to_string(p);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double orig = params[p][i];
      work[p][i] = orig + options.step;
      const double up = evaluate(f, work);
      work[p][i] = orig - options.step;
      const double down = evaluate(f, work);
      work[p][i] = orig;

      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
      }
      ++report.entries_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.params.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace din::ad
