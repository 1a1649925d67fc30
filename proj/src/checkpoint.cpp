#include <fstream>
#include <string>

#include "json.hpp"
#include "ppgad/binary_io.hpp"
#include "ppgad/error.hpp"
#include "ppgad/nn.hpp"
#include "ppgad/version.hpp"

namespace ppgad::nn {

namespace {

constexpr const char* kMagic = "PPGAD-CHECKPOINT 1";

nlohmann::json spec_to_json(const ArchitectureSpec& s) {
  return {{"input_len", s.input_len}, {"kernel", s.kernel},         {"channels", s.channels},
          {"blocks", s.blocks},       {"latent_dim", s.latent_dim}, {"n_classes", s.n_classes}};
}

ArchitectureSpec spec_from_json(const nlohmann::json& j) {
  ArchitectureSpec s;
  s.input_len = j.at("input_len").get<std::size_t>();
  s.kernel = j.at("kernel").get<std::size_t>();
  s.channels = j.at("channels").get<std::size_t>();
  s.blocks = j.at("blocks").get<std::size_t>();
  s.latent_dim = j.at("latent_dim").get<std::size_t>();
  s.n_classes = j.at("n_classes").get<std::size_t>();
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const ModelParams& p = checkpoint.params;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : p.tensors()) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", t.offset}});
  }
  const auto& tc = checkpoint.train;
  nlohmann::json header = {
      {"format", "ppgad-checkpoint"},
      {"version", checkpoint.version.empty() ? std::string(kVersion) : checkpoint.version},
      {"architecture", spec_to_json(p.spec())},
      {"train",
       {{"learning_rate", tc.learning_rate},
        {"decay", tc.decay},
        {"batch_size", tc.batch_size},
        {"epochs", tc.epochs},
        {"seed", tc.seed},
        {"repeats", tc.repeats}}},
      {"seed", checkpoint.seed},
      {"parameter_count", p.size()},
      {"encoding", "float64-le"},
      {"tensors", tensors}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot open checkpoint for writing: " + path);
  out << kMagic << '\n' << header.dump() << '\n';
  io::write_f64_le(out, p.values());
  if (!out) throw IngestionError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint: " + path);
  std::string magic;
  std::string header_line;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw IngestionError("not a ppgad checkpoint: " + path);
  }
  if (!std::getline(in, header_line)) throw IngestionError("truncated checkpoint header: " + path);

  try {
    const auto header = nlohmann::json::parse(header_line);
    const ArchitectureSpec spec = spec_from_json(header.at("architecture"));
    ModelParams params(spec);
    if (header.at("parameter_count").get<std::size_t>() != params.size()) {
      throw IngestionError("checkpoint parameter count does not match its architecture: " + path);
    }
    io::read_f64_le(in, params.values(), path);
    const auto& tj = header.at("train");
    TrainConfig tc;
    tc.learning_rate = tj.at("learning_rate").get<double>();
    tc.decay = tj.at("decay").get<double>();
    tc.batch_size = tj.at("batch_size").get<std::size_t>();
    tc.epochs = tj.at("epochs").get<std::size_t>();
    tc.seed = tj.at("seed").get<std::uint64_t>();
    tc.repeats = tj.at("repeats").get<std::size_t>();
    return Checkpoint{std::move(params), tc, header.at("seed").get<std::uint64_t>(),
                      header.at("version").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("malformed checkpoint header in " + path + ": " + e.what());
  }
}

}  // namespace ppgad::nn
