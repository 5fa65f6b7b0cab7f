#include "momn/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace momn::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary tensor format assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'O', 'M', 'N'};

Error input_error(const std::string& what) { return Error(ErrorKind::Input, what); }

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw input_error(std::string("truncated tensor file while reading ") + what + ": expected " +
                        std::to_string(pos_ + n) + " bytes, got " + std::to_string(bytes_.size()));
    }
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "bin") return Format::Bin;
  throw Error(ErrorKind::Parameter, "unknown tensor format '" + name + "' (expected csv or bin)");
}

Matrix Tensor::as_matrix() const {
  switch (dims.size()) {
    case 0: return Matrix(1, 1, data);
    case 1: return Matrix(1, dims[0], data);
    case 2: return Matrix(dims[0], dims[1], data);
    default: throw input_error("tensor of rank " + std::to_string(dims.size()) + " is not a matrix");
  }
}

Tensor Tensor::from_matrix(const Matrix& m) { return {{m.rows(), m.cols()}, m.values()}; }
Tensor Tensor::vector(const std::vector<double>& v) { return {{v.size()}, v}; }
Tensor Tensor::scalar(double s) { return {{}, {s}}; }

Matrix parse_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string field = trim(rest.substr(0, comma));
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (field.empty() || ec != std::errc() || ptr != last) {
        throw input_error("csv line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(ErrorKind::Dimension, "csv line " + std::to_string(line_no) + " has " +
                                            std::to_string(count) + " fields, expected " +
                                            std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw input_error("csv input is empty");
  return Matrix(rows, cols, std::move(values));
}

std::string format_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::uint8_t> encode(const std::vector<Tensor>& tensors) {
  std::vector<std::uint8_t> out;
  for (const Tensor& t : tensors) {
    std::uint64_t expected = 1;
    for (auto d : t.dims) expected *= d;
    if (expected != t.data.size()) throw Error(ErrorKind::Dimension, "tensor dims do not match data length");
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put<std::uint16_t>(out, kBinVersion);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    for (double v : t.data) put<double>(out, v);
  }
  return out;
}

std::vector<Tensor> decode(const std::vector<std::uint8_t>& bytes) {
  std::vector<Tensor> out;
  Reader r(bytes);
  if (r.done()) throw input_error("tensor file is empty");
  while (!r.done()) {
    char magic[4];
    for (char& ch : magic) ch = static_cast<char>(r.get<std::uint8_t>("magic"));
    if (std::memcmp(magic, kMagic, 4) != 0) {
      throw input_error("bad magic at byte " + std::to_string(r.pos() - 4) + " (expected \"MOMN\")");
    }
    const auto version = r.get<std::uint16_t>("version");
    if (version != kBinVersion) {
      throw input_error("unsupported tensor format version " + std::to_string(version));
    }
    const auto rank = r.get<std::uint16_t>("rank");
    Tensor t;
    std::uint64_t count = 1;
    for (std::uint16_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.get<std::uint64_t>("dims"));
      count *= t.dims.back();
    }
    r.need(count * sizeof(double), "data");
    t.data.resize(count);
    for (auto& v : t.data) v = r.get<double>("data");
    out.push_back(std::move(t));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return {text.begin(), text.end()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  write_text(path, std::string(bytes.begin(), bytes.end()));
}

}  // namespace

Matrix load_tensor(const std::filesystem::path& path, Format format) {
  if (format == Format::Csv) {
    try {
      return parse_csv(read_text(path));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io) throw;
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
  }
  const auto tensors = decode(read_bytes(path));
  if (tensors.size() != 1) {
    throw input_error(path.string() + " holds " + std::to_string(tensors.size()) +
                      " tensors, expected 1");
  }
  return tensors.front().as_matrix();
}

void save_tensor(const std::filesystem::path& path, const Matrix& m, Format format) {
  if (format == Format::Csv) {
    write_text(path, format_csv(m));
  } else {
    write_bytes(path, encode({Tensor::from_matrix(m)}));
  }
}

void save_attention_params(const std::filesystem::path& path, const attention::AttentionParams& p) {
  write_bytes(path, encode({Tensor::from_matrix(p.w1), Tensor::vector(p.b1), Tensor::from_matrix(p.w2),
                            Tensor::vector(p.b2), Tensor::scalar(static_cast<double>(p.reduction))}));
}

attention::AttentionParams load_attention_params(const std::filesystem::path& path) {
  const auto t = decode(read_bytes(path));
  if (t.size() != 5 || t[0].dims.size() != 2 || t[1].dims.size() != 1 || t[2].dims.size() != 2 ||
      t[3].dims.size() != 1 || !t[4].dims.empty()) {
    throw input_error(path.string() + " is not an attention-params container (w1, b1, w2, b2, r)");
  }
  attention::AttentionParams p{t[0].as_matrix(), t[1].data, t[2].as_matrix(), t[3].data,
                               static_cast<std::size_t>(t[4].data[0])};
  p.validate(p.w1.cols());
  if (attention::hidden_width(p.channels(), p.reduction) != p.hidden()) {
    throw Error(ErrorKind::Dimension, "reduction " + std::to_string(p.reduction) +
                                          " does not match hidden width " + std::to_string(p.hidden()));
  }
  return p;
}

}  // namespace momn::io
