#include "spam/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spam/core/error.hpp"
#include "spam/train/config_json.hpp"

namespace spam::train {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'P', 'A', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw DataError("corrupt checkpoint: truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json config = {{"format_version", std::to_string(kCheckpointVersion)},
                 {"train", to_json(ckpt.config)},
                 {"aux", to_json(ckpt.aux)},
                 {"vocabulary", ckpt.model.vocabulary().words()}};
  config["train"]["model"] = to_json(ckpt.model.config());
  const std::string text = config.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  const auto& params = ckpt.model.parameters().all();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint8_t>(out, p.frozen ? 1 : 0);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put<float>(out, static_cast<float>(p.value.data()[i]));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto text_size = in.get<std::uint64_t>();
  const char* text = in.take(static_cast<std::size_t>(text_size));

  TrainConfig config;
  AuxNormalizer aux;
  std::vector<std::string> words;
  try {
    const json j = json::parse(text, text + text_size);
    if (j.at("format_version").get<std::string>() != std::to_string(kCheckpointVersion)) {
      throw DataError("corrupt checkpoint: config version disagrees with header");
    }
    config = train_config_from_json(j.at("train"));
    aux = aux_normalizer_from_json(j.at("aux"));
    words = j.at("vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint config: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("corrupt checkpoint config: ") + e.what());
  }
  if (words.empty() || words[0] != model::Vocabulary::kUnknownToken) {
    throw DataError("corrupt checkpoint: vocabulary must start with the unknown token");
  }
  words.erase(words.begin());

  Checkpoint ckpt{model::SpamModel(config.model, model::Vocabulary(std::move(words))), aux, config};
  auto& store = ckpt.model.parameters();
  const auto count = in.get<std::uint32_t>();
  if (count != store.size()) throw DataError("corrupt checkpoint: parameter count mismatch");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_size = in.get<std::uint32_t>();
    const std::string name(in.take(name_size), name_size);
    const bool frozen = in.get<std::uint8_t>() != 0;
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    auto& p = store[k];
    if (p.name != name || p.frozen != frozen || static_cast<std::uint64_t>(p.value.rows()) != rows ||
        static_cast<std::uint64_t>(p.value.cols()) != cols) {
      throw DataError("corrupt checkpoint: parameter '" + name + "' does not match the model layout");
    }
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = in.get<float>();
  }
  if (!in.done()) throw DataError("corrupt checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace spam::train
