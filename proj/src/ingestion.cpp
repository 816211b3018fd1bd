#include "lod/ingestion.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "lod/error.hpp"

namespace lod {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size())
    throw ParseError("truncated IDX header: need " + std::to_string(offset + 4) + " bytes, have " +
                         std::to_string(bytes.size()),
                     bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImageMagic) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", magic);
    throw ParseError(std::string("wrong IDX magic ") + buf + ", expected 0x00000803 (unsigned byte, 3 dims)", 0);
  }
  ImageSet images;
  images.count = read_be32(bytes, 4);
  images.rows = read_be32(bytes, 8);
  images.cols = read_be32(bytes, 12);
  constexpr std::size_t kHeader = 16;

  const std::size_t max = std::numeric_limits<std::size_t>::max();
  if (images.rows != 0 && images.cols > max / images.rows) throw ParseError("IDX dimensions overflow", 8);
  const std::size_t plane = images.rows * images.cols;
  if (plane != 0 && images.count > (max - kHeader) / plane) throw ParseError("IDX dimensions overflow", 4);
  const std::size_t payload = images.count * plane;
  if (bytes.size() - kHeader < payload)
    throw ParseError("truncated IDX payload: expected " + std::to_string(payload) + " bytes, got " +
                         std::to_string(bytes.size() - kHeader),
                     bytes.size());
  images.pixels.assign(bytes.begin() + kHeader, bytes.begin() + static_cast<std::ptrdiff_t>(kHeader + payload));
  return images;
}

std::vector<std::uint8_t> encode_idx_images(const ImageSet& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.count));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int n = 0;
  while ((n = gzread(file, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(file);
  if (failed) throw std::runtime_error("error decompressing " + path.string());
  return bytes;
}

ImageSet load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_maybe_gzip(path)); }

std::string_view to_string(QuantizationPolicy policy) {
  switch (policy) {
    case QuantizationPolicy::kEqualWidth: return "equal-width";
  }
  return "?";
}

std::size_t quantize_pixel(std::uint8_t value, std::size_t levels, QuantizationPolicy policy) {
  switch (policy) {
    case QuantizationPolicy::kEqualWidth: return static_cast<std::size_t>(value) * levels / 256;
  }
  throw DomainError("unknown quantization policy");
}

void PatchSpec::validate(std::size_t image_rows, std::size_t image_cols) const {
  if (levels < 2) throw DomainError("patch quantization needs at least 2 levels");
  if (height < 1 || width < 1) throw DomainError("patch must be at least 1x1");
  if (row + height > image_rows || col + width > image_cols)
    throw DomainError("patch at (" + std::to_string(row) + "," + std::to_string(col) + ") leaves the " +
                      std::to_string(image_rows) + "x" + std::to_string(image_cols) + " image");
}

bool patches_overlap(const PatchSpec& a, const PatchSpec& b) {
  return a.row < b.row + b.height && b.row < a.row + a.height && a.col < b.col + b.width && b.col < a.col + a.width;
}

void validate_patch_set(std::span<const PatchSpec> patches, std::size_t image_rows, std::size_t image_cols) {
  for (std::size_t a = 0; a < patches.size(); ++a) {
    patches[a].validate(image_rows, image_cols);
    for (std::size_t b = a + 1; b < patches.size(); ++b)
      if (patches_overlap(patches[a], patches[b]))
        throw DomainError("patches " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
  }
}

std::vector<PatchSpec> default_patch_locations() {
  std::vector<PatchSpec> out;
  for (std::size_t r : {10, 16})
    for (std::size_t c : {8, 12, 16, 20}) out.push_back(PatchSpec{.row = r, .col = c});
  return out;
}

EmpiricalDataset::EmpiricalDataset(StateSpace space, std::vector<std::uint64_t> counts)
    : counts_(std::move(counts)), total_(std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0})) {
  if (counts_.size() != space.total()) throw DomainError("dataset counts do not match the state space");
  if (total_ == 0) throw DomainError("dataset is empty");
  std::vector<double> probs(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i)
    probs[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  pmf_ = Pmf::normalized(std::move(space), std::move(probs));
}

EmpiricalDataset quantize_and_extract(const ImageSet& images, const PatchSpec& spec) {
  spec.validate(images.rows, images.cols);
  const StateSpace space = spec.space();
  std::vector<std::uint64_t> counts(space.total(), 0);
  for (std::size_t img = 0; img < images.count; ++img) {
    std::size_t flat = 0;
    for (std::size_t r = 0; r < spec.height; ++r)
      for (std::size_t c = 0; c < spec.width; ++c)
        flat = flat * spec.levels + quantize_pixel(images.at(img, spec.row + r, spec.col + c), spec.levels, spec.policy);
    ++counts[flat];
  }
  return EmpiricalDataset(space, std::move(counts));
}

EmpiricalDataset synthetic_dataset(std::uint64_t seed, const StateSpace& space, double correlation_strength,
                                   std::uint64_t samples) {
  if (!(correlation_strength >= 0.0 && correlation_strength <= 1.0))
    throw DomainError("correlation strength must lie in [0, 1]");
  if (samples == 0) throw DomainError("need at least one sample");
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  auto simplex = [&](std::size_t k) {
    std::vector<double> v(k);
    double z = 0.0;
    for (double& e : v) z += (e = gamma(rng));
    for (double& e : v) e /= z;
    return v;
  };

  std::vector<std::vector<double>> marginals;
  for (std::size_t v = 0; v < space.num_vars(); ++v) marginals.push_back(simplex(space.card(v)));
  const std::size_t n_modes = std::clamp<std::size_t>(space.total() / 16, 2, 8);
  std::uniform_int_distribution<std::size_t> pick(0, space.total() - 1);
  std::vector<std::size_t> modes(n_modes);
  for (auto& m : modes) m = pick(rng);
  const std::vector<double> mode_weights = simplex(n_modes);

  DigitTable digits(space);
  std::vector<double> mix(space.total());
  for (std::size_t s = 0; s < space.total(); ++s) {
    double p = 1.0;
    for (std::size_t v = 0; v < space.num_vars(); ++v) p *= marginals[v][digits(s, v)];
    mix[s] = (1.0 - correlation_strength) * p;
  }
  for (std::size_t m = 0; m < n_modes; ++m) mix[modes[m]] += correlation_strength * mode_weights[m];

  std::discrete_distribution<std::size_t> draw(mix.begin(), mix.end());
  std::vector<std::uint64_t> counts(space.total(), 0);
  for (std::uint64_t t = 0; t < samples; ++t) ++counts[draw(rng)];
  return EmpiricalDataset(space, std::move(counts));
}

nlohmann::json dataset_to_json(const EmpiricalDataset& data) {
  return nlohmann::json{{"format", "lod-dataset"},
                        {"version", kDatasetFormatVersion},
                        {"cards", data.space().cards()},
                        {"total", data.total()},
                        {"counts", data.counts()}};
}

EmpiricalDataset dataset_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "lod-dataset") throw DomainError("not a lod-dataset document");
  if (doc.value("version", 0) != kDatasetFormatVersion) throw DomainError("unsupported dataset format version");
  EmpiricalDataset data(StateSpace(doc.at("cards").get<std::vector<std::size_t>>()),
                        doc.at("counts").get<std::vector<std::uint64_t>>());
  if (data.total() != doc.at("total").get<std::uint64_t>()) throw DomainError("dataset total does not match counts");
  return data;
}

void save_dataset(const EmpiricalDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dataset_to_json(data).dump() << '\n';
}

EmpiricalDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return dataset_from_json(nlohmann::json::parse(in));
}

}  // namespace lod
