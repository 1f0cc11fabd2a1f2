#include "io/floatmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace lcnf::io {
namespace {

std::uint32_t swap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

std::string read_token(std::istream& in, const std::string& path) {
  std::string tok;
  if (!(in >> tok)) throw IoError(path + ": truncated float-map header");
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::string& path) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size() || v == 0) throw IoError(path + ": bad float-map dimension \"" + tok + "\"");
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_float_map(const std::string& path, const std::vector<RealGrid>& planes) {
  if (planes.empty()) throw ShapeError("float map needs at least one plane");
  const std::size_t rows = planes[0].rows(), cols = planes[0].cols();
  for (const auto& p : planes)
    if (p.rows() != rows || p.cols() != cols) throw ShapeError("float-map planes differ in shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (planes.size() == 1)
    out << "Pf\n" << cols << " " << rows << "\n-1.0\n";
  else
    out << "Pm\n" << cols << " " << rows << " " << planes.size() << "\n-1.0\n";
  std::vector<std::uint32_t> row(cols);
  for (const auto& p : planes)
    for (std::size_t r = rows; r-- > 0;) {
      for (std::size_t c = 0; c < cols; ++c) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(p(r, c)));
        if constexpr (std::endian::native == std::endian::big) bits = swap32(bits);
        row[c] = bits;
      }
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(cols * 4));
    }
  if (!out) throw IoError("failed writing " + path);
}

std::vector<RealGrid> read_float_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string magic = read_token(in, path);
  if (magic != "Pf" && magic != "Pm") throw IoError(path + ": unsupported float-map magic \"" + magic + "\"");
  const std::size_t cols = parse_size(read_token(in, path), path);
  const std::size_t rows = parse_size(read_token(in, path), path);
  const std::size_t planes = magic == "Pm" ? parse_size(read_token(in, path), path) : 1;
  const std::string scale_tok = read_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw IoError(path + ": bad float-map scale \"" + scale_tok + "\"");
  }
  if (scale == 0.0) throw IoError(path + ": float-map scale must be nonzero");
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);

  const std::size_t expected = rows * cols * planes * 4;
  std::vector<std::uint32_t> raw(rows * cols * planes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != expected)
    throw IoError(path + ": truncated pixel data, expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(got));
  std::vector<RealGrid> out;
  std::size_t k = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    RealGrid g(rows, cols);
    for (std::size_t r = rows; r-- > 0;)
      for (std::size_t c = 0; c < cols; ++c) {
        std::uint32_t bits = raw[k++];
        if (swap) bits = swap32(bits);
        g(r, c) = static_cast<double>(std::bit_cast<float>(bits));
      }
    out.push_back(std::move(g));
  }
  return out;
}

void write_real(const std::string& path, const RealGrid& image) { write_float_map(path, {image}); }

RealGrid read_real(const std::string& path) {
  auto planes = read_float_map(path);
  if (planes.size() != 1)
    throw IoError(path + ": expected a single-plane float map, found " + std::to_string(planes.size()) + " planes");
  return std::move(planes[0]);
}

void write_complex(const std::string& path, const ComplexGrid& field) {
  RealGrid re(field.rows(), field.cols()), im(field.rows(), field.cols());
  for (std::size_t i = 0; i < field.size(); ++i) {
    re[i] = field[i].real();
    im[i] = field[i].imag();
  }
  write_float_map(path, {re, im});
}

ComplexGrid read_complex(const std::string& path) {
  const auto planes = read_float_map(path);
  if (planes.size() != 2)
    throw IoError(path + ": expected 2 planes (real, imaginary), found " + std::to_string(planes.size()));
  ComplexGrid f(planes[0].rows(), planes[0].cols());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = {planes[0][i], planes[1][i]};
  return f;
}

void write_preview(const std::string& path, const RealGrid& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  const double lo = min_value(image), hi = max_value(image);
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp((image[i] - lo) / span, 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace lcnf::io
