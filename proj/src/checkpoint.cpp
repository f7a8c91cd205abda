#include "pepkit/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace pepkit {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'P', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <class T>
void append_le(std::vector<std::uint8_t>& buf, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = sizeof(T); i-- > 0;) buf.push_back(raw[i]);
  } else {
    buf.insert(buf.end(), raw, raw + sizeof(T));
  }
}

template <class T>
T read_le(const std::vector<std::uint8_t>& buf, std::size_t& cursor,
          const std::filesystem::path& path) {
  if (cursor + sizeof(T) > buf.size()) {
    throw data_error(path.string() + ": truncated checkpoint");
  }
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, buf.data() + cursor, sizeof(T));
  cursor += sizeof(T);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::uint32_t crc_of(const std::vector<std::uint8_t>& buf, std::size_t length) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(length)));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.spec.validate();
  check_params(ckpt.spec, ckpt.params);
  ckpt.params.validate();

  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
  append_le(buf, static_cast<std::uint32_t>(ckpt.spec.layers.size()));
  for (const auto& layer : ckpt.spec.layers) {
    append_le(buf, static_cast<std::uint32_t>(layer.input_width));
    append_le(buf, static_cast<std::uint32_t>(layer.output_width));
    buf.push_back(static_cast<std::uint8_t>(layer.activation));
  }
  append_le(buf, static_cast<std::uint64_t>(ckpt.params.size()));
  for (Index i = 0; i < ckpt.params.size(); ++i) append_le(buf, ckpt.params.values[i]);
  append_le(buf, crc_of(buf, buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw data_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw data_error(path.string() + ": not a checkpoint file");
  }
  const std::uint32_t stored_crc = [&] {
    std::size_t tail = buf.size() - 4;
    return read_le<std::uint32_t>(buf, tail, path);
  }();
  if (crc_of(buf, buf.size() - 4) != stored_crc) {
    throw data_error(path.string() + ": checksum mismatch");
  }

  std::size_t cursor = sizeof(kMagic);
  const auto layer_count = read_le<std::uint32_t>(buf, cursor, path);
  if (layer_count == 0 || layer_count > 1024) {
    throw data_error(path.string() + ": implausible layer count");
  }
  Checkpoint ckpt;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    LayerSpec layer;
    layer.input_width = static_cast<Index>(read_le<std::uint32_t>(buf, cursor, path));
    layer.output_width = static_cast<Index>(read_le<std::uint32_t>(buf, cursor, path));
    const auto code = read_le<std::uint8_t>(buf, cursor, path);
    if (code > 1) throw data_error(path.string() + ": unknown activation code");
    layer.activation = static_cast<Activation>(code);
    ckpt.spec.layers.push_back(layer);
  }
  try {
    ckpt.spec.validate();
  } catch (const config_error& e) {
    throw data_error(path.string() + ": invalid network spec: " + e.what());
  }
  const auto declared = read_le<std::uint64_t>(buf, cursor, path);
  if (declared != static_cast<std::uint64_t>(param_count(ckpt.spec))) {
    throw data_error(path.string() + ": parameter count does not match layer widths");
  }
  ckpt.params.layout = param_layout(ckpt.spec);
  ckpt.params.values.resize(static_cast<Index>(declared));
  for (std::uint64_t i = 0; i < declared; ++i) {
    ckpt.params.values[static_cast<Index>(i)] = read_le<double>(buf, cursor, path);
  }
  if (cursor != buf.size() - 4) {
    throw data_error(path.string() + ": trailing bytes after parameters");
  }
  try {
    ckpt.params.validate();
  } catch (const numeric_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace pepkit
