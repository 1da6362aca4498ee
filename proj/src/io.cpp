#include "nfqs/io.hpp"

#include <charconv>
#include <fstream>

#include "nfqs/errors.hpp"

namespace nfqs {

namespace {

constexpr int kCheckpointVersion = 1;

json mlp_to_json(const MlpSpec& s) {
  return json{{"in_dim", s.in_dim},
              {"out_dim", s.out_dim},
              {"hidden", s.hidden},
              {"activation", s.activation == Activation::kTanh ? "tanh" : "identity"},
              {"layer_norm", s.layer_norm}};
}

MlpSpec mlp_from_json(const json& j) {
  MlpSpec s;
  s.in_dim = j.at("in_dim").get<int>();
  s.out_dim = j.at("out_dim").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "tanh")
    s.activation = Activation::kTanh;
  else if (act == "identity")
    s.activation = Activation::kIdentity;
  else
    throw ConfigError("checkpoint: unknown activation " + act);
  s.layer_norm = j.at("layer_norm").get<bool>();
  return s;
}

}  // namespace

json model_to_json(const FlowModel& m) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["params"] = m.params;
  if (m.kind == FlowKind::kQnvp) {
    j["kind"] = "qnvp";
    j["n_dof"] = m.qnvp.n_dof;
    j["depth"] = m.qnvp.depth;
    j["s_spec"] = mlp_to_json(m.qnvp.s_spec);
    j["t_spec"] = mlp_to_json(m.qnvp.t_spec);
    json masks = json::array();
    for (const auto& mask : m.qnvp.masks) {
      json row = json::array();
      for (uint8_t b : mask) row.push_back(static_cast<int>(b));
      masks.push_back(row);
    }
    j["masks"] = masks;
  } else {
    j["kind"] = "qcnf";
    j["n_dof"] = m.qcnf.n_dof;
    j["f_spec"] = mlp_to_json(m.qcnf.f_spec);
    j["n_steps"] = m.qcnf.n_steps;
  }
  return j;
}

FlowModel model_from_json(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported format version " +
                      std::to_string(version));
  FlowModel m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "qnvp") {
    m.kind = FlowKind::kQnvp;
    m.qnvp.n_dof = j.at("n_dof").get<int>();
    m.qnvp.depth = j.at("depth").get<int>();
    m.qnvp.s_spec = mlp_from_json(j.at("s_spec"));
    m.qnvp.t_spec = mlp_from_json(j.at("t_spec"));
    m.qnvp.masks.clear();
    for (const auto& row : j.at("masks")) {
      std::vector<uint8_t> mask;
      for (const auto& b : row) mask.push_back(static_cast<uint8_t>(b.get<int>()));
      m.qnvp.masks.push_back(mask);
    }
  } else if (kind == "qcnf") {
    m.kind = FlowKind::kQcnf;
    m.qcnf.n_dof = j.at("n_dof").get<int>();
    m.qcnf.f_spec = mlp_from_json(j.at("f_spec"));
    m.qcnf.n_steps = j.at("n_steps").get<int>();
  } else {
    throw ConfigError("checkpoint: unknown architecture tag " + kind);
  }
  m.params = j.at("params").get<std::vector<double>>();
  m.validate();
  return m;
}

void save_checkpoint(const std::string& path, const FlowModel& m) {
  write_json_file(path, model_to_json(m));
}

FlowModel load_checkpoint(const std::string& path) {
  return model_from_json(read_json_file(path));
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open for reading: " + path);
  json j;
  f >> j;
  return j;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvWriter::Impl {
  std::ofstream f;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : impl_(new Impl) {
  impl_->f.open(path);
  if (!impl_->f) throw Error("cannot open for writing: " + path);
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) impl_->f << ",";
    impl_->f << columns[i];
  }
  impl_->f << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) impl_->f << ",";
    impl_->f << format_double(values[i]);
  }
  impl_->f << "\n";
}

void CsvWriter::flush() { impl_->f.flush(); }

}  // namespace nfqs
