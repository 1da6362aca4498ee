#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nfqs/flow.hpp"

namespace nfqs {

using json = nlohmann::json;

json model_to_json(const FlowModel& m);
FlowModel model_from_json(const json& j);

// Self-describing checkpoint container; parameters round-trip bitwise.
void save_checkpoint(const std::string& path, const FlowModel& m);
FlowModel load_checkpoint(const std::string& path);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

// Minimal CSV writer; numbers are emitted with round-trip precision.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void flush();

 private:
  struct Impl;
  Impl* impl_;
};

std::string format_double(double v);

}  // namespace nfqs
