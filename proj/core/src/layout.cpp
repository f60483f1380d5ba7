#include "collage/layout.hpp"

#include <fstream>

#include <json.hpp>

#include "collage/error.hpp"
#include "collage/png_io.hpp"

namespace collage {

int ClassTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void ClassTable::validate() const {
  if (classes.empty()) fail(ErrorKind::invalid_input, "class table is empty");
  if (classes.size() > 254) fail(ErrorKind::invalid_input, "more than 254 classes");
  for (const auto& name : classes) {
    if (name.empty()) fail(ErrorKind::invalid_input, "class table contains an empty name");
  }
  if (unlabeled < classes.size()) {
    fail(ErrorKind::invalid_input, "unlabeled sentinel collides with a class index");
  }
}

void SemanticLayout::validate() const {
  if (labels.width() < 1 || labels.height() < 1) {
    fail(ErrorKind::invalid_input, "layout has an empty frame");
  }
  if (classes.empty()) fail(ErrorKind::invalid_input, "layout has an empty class table");
  if (classes.size() > 254) fail(ErrorKind::invalid_input, "more than 254 classes");
  for (auto label : labels) {
    if (!label_valid(label)) {
      fail(ErrorKind::invalid_input,
           "layout label " + std::to_string(label) + " outside the class table");
    }
  }
}

ClassTable load_class_table(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) fail(ErrorKind::io, "cannot open class table '" + json_path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "malformed class table '" + json_path.string() + "': " + e.what());
  }
  ClassTable table;
  try {
    table.classes = doc.at("classes").get<std::vector<std::string>>();
    table.unlabeled = doc.value("unlabeled", 255);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "malformed class table '" + json_path.string() + "': " + e.what());
  }
  table.validate();
  return table;
}

void save_class_table(const std::filesystem::path& json_path, const ClassTable& table) {
  table.validate();
  nlohmann::json doc;
  doc["classes"] = table.classes;
  doc["unlabeled"] = table.unlabeled;
  std::ofstream out(json_path);
  if (!out) fail(ErrorKind::io, "cannot write class table '" + json_path.string() + "'");
  out << doc.dump(2) << '\n';
}

SemanticLayout load_layout(const std::filesystem::path& png_path, const ClassTable& table) {
  table.validate();
  SemanticLayout layout;
  layout.classes = table.classes;
  layout.labels = png::read_gray8(png_path);
  if (table.unlabeled != SemanticLayout::kUnlabeled) {
    for (auto& label : layout.labels) {
      if (label == table.unlabeled) label = SemanticLayout::kUnlabeled;
    }
  }
  try {
    layout.validate();
  } catch (const Error& e) {
    fail(ErrorKind::invalid_input, "'" + png_path.string() + "': " + e.what());
  }
  return layout;
}

void save_layout(const std::filesystem::path& png_path, const SemanticLayout& layout) {
  layout.validate();
  png::write_gray8(png_path, layout.labels);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::io: return "io failure";
    case ErrorKind::corrupt_bank: return "corrupt bank";
    case ErrorKind::version_mismatch: return "version mismatch";
    case ErrorKind::missing_asset: return "missing asset";
    case ErrorKind::backend_failure: return "backend failure";
  }
  return "unknown";
}

}  // namespace collage
