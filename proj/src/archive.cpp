#include <fstream>
#include <string>

#include "json.hpp"
#include "ppgad/binary_io.hpp"
#include "ppgad/data.hpp"
#include "ppgad/error.hpp"
#include "ppgad/version.hpp"

namespace ppgad::data {

namespace {

constexpr const char* kMagic = "PPGAD-WINDOWS 1";

}  // namespace

void save_windows(const std::string& path, const WindowsArchive& archive) {
  nlohmann::json provenance = nlohmann::json::array();
  for (const auto& w : archive.windows) {
    if (w.values.size() != archive.target_len) {
      throw ContractViolation("save_windows: window length " + std::to_string(w.values.size()) +
                              " differs from target length " +
                              std::to_string(archive.target_len));
    }
    provenance.push_back({w.source_subject, w.source_activity.name(), w.source_record, w.offset,
                          w.index, w.start_time_s});
  }
  const nlohmann::json header = {{"format", "ppgad-windows"},
                                 {"version", kVersion},
                                 {"target_len", archive.target_len},
                                 {"fs", archive.fs},
                                 {"window_s", archive.window_s},
                                 {"overlap_s", archive.overlap_s},
                                 {"band", {archive.low_hz, archive.high_hz}},
                                 {"count", archive.windows.size()},
                                 {"encoding", "float64-le"},
                                 {"provenance", provenance}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot open windows archive for writing: " + path);
  out << kMagic << '\n' << header.dump() << '\n';
  for (const auto& w : archive.windows) io::write_f64_le(out, w.values);
  if (!out) throw IngestionError("failed writing windows archive: " + path);
}

WindowsArchive load_windows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open windows archive: " + path);
  std::string magic;
  std::string header_line;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw IngestionError("not a ppgad windows archive: " + path);
  }
  if (!std::getline(in, header_line)) throw IngestionError("truncated archive header: " + path);

  WindowsArchive a;
  try {
    const auto h = nlohmann::json::parse(header_line);
    a.target_len = h.at("target_len").get<std::size_t>();
    a.fs = h.at("fs").get<double>();
    a.window_s = h.at("window_s").get<double>();
    a.overlap_s = h.at("overlap_s").get<double>();
    a.low_hz = h.at("band").at(0).get<double>();
    a.high_hz = h.at("band").at(1).get<double>();
    const auto count = h.at("count").get<std::size_t>();
    const auto& prov = h.at("provenance");
    if (prov.size() != count) throw IngestionError("archive provenance count mismatch: " + path);
    a.windows.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      Window& w = a.windows[i];
      const auto& p = prov.at(i);
      w.source_subject = p.at(0).get<std::string>();
      w.source_activity = Activity::parse(p.at(1).get<std::string>());
      w.source_record = p.at(2).get<std::string>();
      w.offset = p.at(3).get<std::size_t>();
      w.index = p.at(4).get<std::size_t>();
      w.start_time_s = p.at(5).get<double>();
      w.values.resize(a.target_len);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("malformed windows archive header in " + path + ": " + e.what());
  }
  for (auto& w : a.windows) io::read_f64_le(in, w.values, path);
  return a;
}

}  // namespace ppgad::data
