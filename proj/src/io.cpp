#include "modreb/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace modreb {
namespace {

const Json& require(const Json& doc, const std::string& field) {
  if (!doc.is_object() || !doc.contains(field)) throw ValidationError(field, "missing");
  return doc.at(field);
}

double number(const Json& value, const std::string& field) {
  if (!value.is_number()) throw ValidationError(field, "must be a finite number");
  return value.get<double>();
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd parse_vector(const Json& value, Eigen::Index n, const std::string& field) {
  if (!value.is_array() || static_cast<Eigen::Index>(value.size()) != n) {
    throw ValidationError(field, "expected an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = number(value[static_cast<std::size_t>(i)], field + "[" + std::to_string(i + 1) + "]");
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const Json& value, Eigen::Index n, const std::string& field,
                             bool allow_scalar = false) {
  if (allow_scalar && value.is_number()) return Eigen::MatrixXd::Constant(n, n, value.get<double>());
  if (!value.is_array()) throw ValidationError(field, "expected an n x n array");
  Eigen::MatrixXd m(n, n);
  const auto cell = [&](Eigen::Index i, Eigen::Index j) {
    return field + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
  };
  if (static_cast<Eigen::Index>(value.size()) == n * n && (n == 1 || !value[0].is_array())) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        m(i, j) = number(value[static_cast<std::size_t>(i * n + j)], cell(i, j));
      }
    }
    return m;
  }
  if (static_cast<Eigen::Index>(value.size()) != n) {
    throw ValidationError(field, "expected " + std::to_string(n) + " rows");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = value[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError(field + " row " + std::to_string(i + 1),
                            "expected " + std::to_string(n) + " entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = number(row[static_cast<std::size_t>(j)], cell(i, j));
  }
  return m;
}

Eigen::MatrixXd parse_square(const Json& value, const std::string& field) {
  if (!value.is_array()) throw ValidationError(field, "expected an n x n array");
  return parse_matrix(value, static_cast<Eigen::Index>(value.size()), field);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const char* status_name(RebalanceStatus status) {
  return status == RebalanceStatus::optimal ? "optimal" : "beta_infeasible";
}

}  // namespace

Json to_json(const GeneratorConfig& config) {
  return {{"env_size", config.env_size},   {"lambda_min", config.lambda_min},
          {"lambda_max", config.lambda_max}, {"f", config.f_value},
          {"mu_factor", config.mu_factor}};
}

GeneratorConfig generator_config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("generator_config", "must be an object");
  GeneratorConfig config;
  const auto read = [&](const char* key, double& target) {
    if (doc.contains(key)) target = number(doc.at(key), std::string("generator_config.") + key);
  };
  read("env_size", config.env_size);
  read("lambda_min", config.lambda_min);
  read("lambda_max", config.lambda_max);
  read("f", config.f_value);
  read("mu_factor", config.mu_factor);
  return config;
}

Json instance_to_json(const StationNetwork& net) {
  Json meta = Json::object();
  if (net.meta.seed) meta["seed"] = *net.meta.seed;
  if (net.meta.generator_config) meta["generator_config"] = to_json(*net.meta.generator_config);
  return {{"n", net.size()},         {"lambda", vector_json(net.lambda)}, {"mu", vector_json(net.mu)},
          {"p", matrix_json(net.p)}, {"T", matrix_json(net.T)},           {"f", matrix_json(net.f)},
          {"meta", std::move(meta)}};
}

StationNetwork instance_from_json(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("instance", "expected a JSON object");
  const Json& n_field = require(doc, "n");
  if (!n_field.is_number_integer() || n_field.get<long long>() < 1) {
    throw ValidationError("n", "must be a positive integer");
  }
  const auto n = static_cast<Eigen::Index>(n_field.get<long long>());

  StationNetwork net;
  net.lambda = parse_vector(require(doc, "lambda"), n, "lambda");
  net.mu = parse_vector(require(doc, "mu"), n, "mu");
  net.p = parse_matrix(require(doc, "p"), n, "p");
  net.T = parse_matrix(require(doc, "T"), n, "T");
  net.f = parse_matrix(require(doc, "f"), n, "f", /*allow_scalar=*/true);

  if (doc.contains("meta")) {
    const Json& meta = doc.at("meta");
    if (!meta.is_object()) throw ValidationError("meta", "must be an object");
    if (meta.contains("seed") && !meta.at("seed").is_null()) {
      if (!meta.at("seed").is_number_unsigned()) throw ValidationError("meta.seed", "must be a non-negative integer");
      net.meta.seed = meta.at("seed").get<std::uint64_t>();
    }
    if (meta.contains("generator_config") && !meta.at("generator_config").is_null()) {
      net.meta.generator_config = generator_config_from_json(meta.at("generator_config"));
    }
  }
  validate(net);
  return net;
}

void save_instance(const std::filesystem::path& path, const StationNetwork& net) {
  write_text(path, instance_to_json(net).dump(2) + "\n");
}

StationNetwork load_instance(const std::filesystem::path& path) { return instance_from_json(read_json(path)); }

Json assignment_to_json(const RebalanceSolution& solution, const Json& meta) {
  return {{"alpha", matrix_json(solution.assignment.alpha)},
          {"beta", matrix_json(solution.assignment.beta)},
          {"v_alpha", solution.assignment.v_alpha},
          {"r_alpha_beta", solution.assignment.r_alpha_beta},
          {"objective_alpha", solution.objective_alpha},
          {"objective_beta", solution.objective_beta},
          {"status", status_name(solution.status)},
          {"meta", meta}};
}

RebalanceSolution assignment_from_json(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("assignment", "expected a JSON object");
  RebalanceSolution solution;
  solution.assignment.alpha = parse_square(require(doc, "alpha"), "alpha");
  solution.assignment.beta = parse_matrix(require(doc, "beta"), solution.assignment.alpha.rows(), "beta");
  solution.assignment.v_alpha = number(require(doc, "v_alpha"), "v_alpha");
  solution.assignment.r_alpha_beta = number(require(doc, "r_alpha_beta"), "r_alpha_beta");
  solution.objective_alpha = number(require(doc, "objective_alpha"), "objective_alpha");
  solution.objective_beta = number(require(doc, "objective_beta"), "objective_beta");
  if (doc.contains("status")) {
    const Json& status = doc.at("status");
    if (status == "optimal") {
      solution.status = RebalanceStatus::optimal;
    } else if (status == "beta_infeasible") {
      solution.status = RebalanceStatus::beta_infeasible;
    } else {
      throw ValidationError("status", "expected \"optimal\" or \"beta_infeasible\"");
    }
  }
  return solution;
}

void save_assignment(const std::filesystem::path& path, const RebalanceSolution& solution, const Json& meta) {
  write_text(path, assignment_to_json(solution, meta).dump(2) + "\n");
}

RebalanceSolution load_assignment(const std::filesystem::path& path) {
  return assignment_from_json(read_json(path));
}

Json flow_debug_json(const FlowProblem& problem, const FlowSolution* solution) {
  Json arcs = Json::array();
  for (std::size_t a = 0; a < problem.arcs.size(); ++a) {
    const Arc& arc = problem.arcs[a];
    Json entry = {{"from", arc.from}, {"to", arc.to}, {"cost", arc.cost}};
    entry["capacity"] = arc.uncapacitated() ? Json("inf") : Json(arc.capacity);
    if (solution) entry["flow"] = solution->flow(static_cast<Eigen::Index>(a));
    arcs.push_back(std::move(entry));
  }
  Json doc = {{"node_count", problem.node_count}, {"supply", vector_json(problem.supply)}, {"arcs", arcs}};
  if (solution) {
    doc["objective"] = solution->objective;
    doc["status"] = solution->status == FlowStatus::optimal ? "optimal" : "infeasible";
  }
  return doc;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.filename().string(), std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace modreb
