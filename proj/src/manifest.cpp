#include "bubbleglare/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bubbleglare/errors.hpp"

namespace bubbleglare {

namespace fs = std::filesystem;

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.image.empty()) throw std::invalid_argument("manifest entry " + std::to_string(i) + " has no image path");
    if (e.truth && e.truth->empty())
      throw std::invalid_argument("manifest entry " + std::to_string(i) + " has an empty truth path");
    if (i > 0 && e.frame <= entries_[i - 1].frame)
      throw std::invalid_argument("manifest frame indices must strictly increase (frame " +
                                  std::to_string(e.frame) + ")");
  }
}

DatasetManifest DatasetManifest::parse(std::string_view jsonl, const fs::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.image = resolve(j.at("image").get<std::string>());
      if (j.contains("truth") && !j["truth"].is_null()) e.truth = resolve(j["truth"].get<std::string>());
      e.frame = j.at("frame").get<int>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return DatasetManifest(std::move(entries));
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

std::string DatasetManifest::serialize(const fs::path& base_dir) const {
  auto rel = [&](const fs::path& p) {
    if (base_dir.empty()) return p.generic_string();
    const auto r = p.lexically_relative(base_dir);
    return r.empty() || *r.begin() == ".." ? p.generic_string() : r.generic_string();
  };
  std::string out;
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["image"] = rel(e.image);
    if (e.truth) j["truth"] = rel(*e.truth);
    j["frame"] = e.frame;
    out += j.dump() + "\n";
  }
  return out;
}

void DatasetManifest::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << serialize(path.parent_path());
}

}  // namespace bubbleglare
