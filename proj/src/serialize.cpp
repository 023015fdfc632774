#include "abset/serialize.hpp"

namespace abset {

namespace {

Json bigint_json(const BigInt& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() &&
      v <= std::numeric_limits<std::int64_t>::max())
    return v.convert_to<std::int64_t>();
  return v.str();
}

Json vecq_json(const VecQ& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(rational_json(v[i]));
  return arr;
}

}  // namespace

Json rational_json(const Rational& q) {
  return Json{{"num", bigint_json(num(q))}, {"den", bigint_json(den(q))}};
}

Json validation_report_json(const std::string& name, const ValidationReport& rep) {
  return Json{{"as_name", name},
              {"is_absorbing", rep.is_absorbing},
              {"is_elementary", rep.is_elementary},
              {"a", rep.a},
              {"b", rep.b},
              {"even_cns", rep.even_cns},
              {"odd_cns", rep.odd_cns},
              {"failures", rep.failures}};
}

Json sweep_report_json(const SweepReport& report) {
  Json j{{"as_name", report.as_name},
         {"tau", rational_json(report.tau)},
         {"lch", rational_json(report.lch)},
         {"trials", report.trials},
         {"outcomes",
          Json{{"converged", report.outcomes.converged},
               {"equilibrium", report.outcomes.equilibrium},
               {"cycle", report.outcomes.cycle},
               {"budget", report.outcomes.budget}}},
         {"seed", report.seed}};
  if (!report.punctured.empty()) j["punctured"] = report.punctured;
  if (report.first_bad_lambda) j["first_bad_lambda"] = vecq_json(*report.first_bad_lambda);
  return j;
}

Json threshold_result_json(const std::string& name, const ValidationReport& rep,
                           const RoutingSystem& rs, const ThresholdResult& result,
                           bool certified, std::optional<std::int64_t> wall_ms) {
  Json j{{"as_name", name},
         {"a", rep.a},
         {"b", rep.b},
         {"n", rs.n},
         {"tau", rational_json(result.tau)},
         {"lambda_max", rational_json(result.lambda_max_used)},
         {"witness",
          Json{{"pattern", result.witness_pattern.bitstring()},
               {"lambda", rational_json(result.witness_lambda)},
               {"x", vecq_json(result.witness_x_unsat)}}},
         {"certified", certified},
         {"stats",
          Json{{"nodes", result.stats.nodes_visited},
               {"lps", result.stats.lps_solved},
               {"prunes1", result.stats.test1_prunes},
               {"prunes2", result.stats.test2_prunes}}}};
  if (result.budget_exhausted) j["budget_exhausted"] = true;
  if (wall_ms) j["wall_ms"] = *wall_ms;
  return j;
}

std::string threshold_result_csv_row(const std::string& name, const ValidationReport& rep,
                                     const RoutingSystem& rs, const ThresholdResult& result) {
  std::string deactivation = "none";
  if (result.tau < 0) {
    const Rational lch = -result.tau * rat(15, 16);  // any value strictly below |tau|
    deactivation = to_string(lch);
  }
  return name + "," + std::to_string(rep.a) + "," + std::to_string(rep.b) + "," +
         std::to_string(rs.n) + "," + num(result.tau).str() + "," + den(result.tau).str() +
         "," + deactivation;
}

}  // namespace abset
