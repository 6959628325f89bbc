#include "edgeguard/array_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace edgeguard {
namespace {

constexpr char kMagic[8] = {'E', 'G', 'A', 'R', 'R', 'A', 'Y', '1'};

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  out.insert(out.end(), raw.begin(), raw.end());
}

template <typename T>
T get_le(const std::byte* p) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

template <typename T>
std::vector<std::byte> pack(std::span<const T> values) {
  std::vector<std::byte> out;
  out.reserve(values.size() * sizeof(T));
  for (const T& v : values) put_le(out, v);
  return out;
}

template <typename T>
std::vector<T> unpack(const FlatArray& a) {
  std::vector<T> out(a.element_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_le<T>(a.payload.data() + i * sizeof(T));
  return out;
}

void expect(const FlatArray& a, DType dtype, std::uint32_t ndim, const char* kind) {
  if (a.dtype != dtype || a.ndim != ndim) {
    throw ShapeError(std::string("flat array does not hold a ") + kind + " (dtype " +
                     std::to_string(static_cast<unsigned>(a.dtype)) + ", ndim " +
                     std::to_string(a.ndim) + ")");
  }
}

FlatArray make(DType dtype, std::initializer_list<std::uint32_t> dims) {
  FlatArray a;
  a.dtype = dtype;
  a.ndim = static_cast<std::uint32_t>(dims.size());
  std::size_t i = 0;
  for (auto d : dims) a.dims[i++] = d;
  return a;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::u8: return 1;
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u16_labels: return 2;
  }
  throw FormatError("unknown dtype code");
}

std::size_t FlatArray::element_count() const {
  std::size_t n = ndim == 0 ? 0 : 1;
  for (std::uint32_t i = 0; i < ndim; ++i) n *= dims[i];
  return n;
}

std::vector<std::byte> encode_flat(const FlatArray& a) {
  if (a.ndim < 1 || a.ndim > 4) throw FormatError("ndim must be in 1..4");
  if (a.payload.size() != a.element_count() * dtype_size(a.dtype)) {
    throw ShapeError("payload size does not match header dimensions");
  }
  std::vector<std::byte> out;
  out.reserve(kFlatHeaderBytes + a.payload.size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, a.ndim);
  for (auto d : a.dims) put_le<std::uint32_t>(out, d);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dtype));
  out.insert(out.end(), a.payload.begin(), a.payload.end());
  return out;
}

FlatArray decode_flat(std::span<const std::byte> bytes) {
  if (bytes.size() < kFlatHeaderBytes) throw FormatError("file shorter than the flat-array header");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("bad magic, expected EGARRAY1");
  FlatArray a;
  a.ndim = get_le<std::uint32_t>(bytes.data() + 8);
  if (a.ndim < 1 || a.ndim > 4) throw FormatError("ndim " + std::to_string(a.ndim) + " not in 1..4");
  for (int i = 0; i < 4; ++i) a.dims[i] = get_le<std::uint32_t>(bytes.data() + 12 + 4 * i);
  const auto code = get_le<std::uint32_t>(bytes.data() + 28);
  if (code > 3) throw FormatError("unknown dtype code " + std::to_string(code));
  a.dtype = static_cast<DType>(code);
  const std::size_t expected = a.element_count() * dtype_size(a.dtype);
  if (bytes.size() - kFlatHeaderBytes != expected) {
    throw FormatError("payload is " + std::to_string(bytes.size() - kFlatHeaderBytes) +
                      " bytes, header implies " + std::to_string(expected));
  }
  a.payload.assign(bytes.begin() + kFlatHeaderBytes, bytes.end());
  return a;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("short read on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

FlatArray read_flat(const std::filesystem::path& path) { return decode_flat(read_file(path)); }

void write_flat(const std::filesystem::path& path, const FlatArray& array) {
  write_file(path, encode_flat(array));
}

ImageTensor load_image(const std::filesystem::path& path) {
  const FlatArray a = read_flat(path);
  expect(a, DType::f32, 3, "image");
  return ImageTensor(Grid<float>(a.dims[0], a.dims[1], a.dims[2], unpack<float>(a)));
}

DepthMap load_depth(const std::filesystem::path& path) {
  const FlatArray a = read_flat(path);
  expect(a, DType::f32, 2, "depth map");
  return DepthMap(Grid<float>(a.dims[0], a.dims[1], 1, unpack<float>(a)));
}

SegProbMap load_probs(const std::filesystem::path& path) {
  const FlatArray a = read_flat(path);
  expect(a, DType::f32, 3, "probability map");
  return SegProbMap(Grid<float>(a.dims[0], a.dims[1], a.dims[2], unpack<float>(a)));
}

SegLabelMap load_labels(const std::filesystem::path& path) {
  const FlatArray a = read_flat(path);
  expect(a, DType::u16_labels, 2, "label map");
  auto raw = unpack<std::uint16_t>(a);
  const int classes = static_cast<int>(a.dims[3]);
  for (auto& v : raw) {
    if (v >= classes) throw RangeError("stored label " + std::to_string(v) + " >= class count");
    v = static_cast<std::uint16_t>(v + 1);
  }
  return SegLabelMap(Grid<std::uint16_t>(a.dims[0], a.dims[1], 1, std::move(raw)), classes);
}

std::vector<double> load_f64(const std::filesystem::path& path, std::vector<std::uint32_t>* shape) {
  const FlatArray a = read_flat(path);
  if (a.dtype != DType::f64) throw ShapeError("expected an f64 array in " + path.string());
  if (shape) shape->assign(a.dims.begin(), a.dims.begin() + a.ndim);
  return unpack<double>(a);
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
  FlatArray a = make(DType::f32, {static_cast<std::uint32_t>(image.height()),
                                  static_cast<std::uint32_t>(image.width()),
                                  static_cast<std::uint32_t>(image.channels())});
  a.payload = pack<float>(image.grid().values());
  write_flat(path, a);
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
  FlatArray a = make(DType::f32, {static_cast<std::uint32_t>(depth.height()),
                                  static_cast<std::uint32_t>(depth.width())});
  a.payload = pack<float>(depth.grid().values());
  write_flat(path, a);
}

void save_probs(const SegProbMap& probs, const std::filesystem::path& path) {
  FlatArray a = make(DType::f32, {static_cast<std::uint32_t>(probs.height()),
                                  static_cast<std::uint32_t>(probs.width()),
                                  static_cast<std::uint32_t>(probs.num_classes())});
  a.payload = pack<float>(probs.grid().values());
  write_flat(path, a);
}

void save_labels(const SegLabelMap& labels, const std::filesystem::path& path) {
  FlatArray a = make(DType::u16_labels, {static_cast<std::uint32_t>(labels.height()),
                                         static_cast<std::uint32_t>(labels.width())});
  a.dims[3] = static_cast<std::uint32_t>(labels.num_classes());
  std::vector<std::uint16_t> zero_based(labels.grid().storage());
  for (auto& v : zero_based) v = static_cast<std::uint16_t>(v - 1);
  a.payload = pack<std::uint16_t>(std::span<const std::uint16_t>(zero_based));
  write_flat(path, a);
}

void save_f64(std::span<const double> values, std::span<const std::uint32_t> shape,
              const std::filesystem::path& path) {
  if (shape.empty() || shape.size() > 4) throw ShapeError("f64 arrays need 1..4 dimensions");
  FlatArray a;
  a.dtype = DType::f64;
  a.ndim = static_cast<std::uint32_t>(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) a.dims[i] = shape[i];
  if (a.element_count() != values.size()) throw ShapeError("value count does not match shape");
  a.payload = pack<double>(values);
  write_flat(path, a);
}

AnyArray load_array(const std::filesystem::path& path, ArrayKind kind) {
  switch (kind) {
    case ArrayKind::image: return load_image(path);
    case ArrayKind::depth: return load_depth(path);
    case ArrayKind::probs: return load_probs(path);
    case ArrayKind::labels: return load_labels(path);
  }
  throw InvalidArgument("unknown array kind");
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::span<const std::byte> bytes, std::size_t& pos) {
  auto ch = [&](std::size_t i) { return static_cast<char>(bytes[i]); };
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(ch(pos)))) {
      ++pos;
    } else if (ch(pos) == '#') {
      while (pos < bytes.size() && ch(pos) != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(ch(pos)))) token += ch(pos++);
  if (token.empty()) throw FormatError("truncated netpbm header");
  return token;
}

int parse_positive(const std::string& token) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    throw FormatError("bad netpbm header field '" + token + "'");
  }
  if (used != token.size() || v <= 0) throw FormatError("bad netpbm header field '" + token + "'");
  return v;
}

}  // namespace

ImageTensor load_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported netpbm magic '" + magic + "', expected P5 or P6");
  }
  const int width = parse_positive(next_token(bytes, pos));
  const int height = parse_positive(next_token(bytes, pos));
  const int maxval = parse_positive(next_token(bytes, pos));
  if (maxval != 255) throw FormatError("netpbm maxval must be 255, got " + std::to_string(maxval));
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < pos || bytes.size() - pos != n) throw FormatError("netpbm raster size mismatch");
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = static_cast<float>(std::to_integer<int>(bytes[pos + i]) / 255.0);
  }
  return ImageTensor(Grid<float>(height, width, channels, std::move(values)));
}

void save_ppm(const ImageTensor& image, const std::filesystem::path& path) {
  const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width()) + " " + std::to_string(image.height()) +
                             "\n255\n";
  std::vector<std::byte> bytes;
  bytes.reserve(header.size() + image.grid().size());
  for (char c : header) bytes.push_back(static_cast<std::byte>(c));
  for (float v : image.grid().values()) {
    bytes.push_back(static_cast<std::byte>(static_cast<int>(std::lround(static_cast<double>(v) * 255.0))));
  }
  write_file(path, bytes);
}

}  // namespace edgeguard
