#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "lossreg/data.hpp"

namespace lossreg::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError(fmt::format("cannot open IDX file '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw TruncatedFileError(fmt::format("'{}' ends inside its header", path.string()));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_all(images_path);
  const auto labels = read_all(labels_path);

  if (const auto magic = read_be32(images, 0, images_path); magic != kImageMagic)
    throw BadMagicError(fmt::format("'{}': image magic 0x{:08x}, expected 0x{:08x}", images_path.string(), magic,
                                    kImageMagic));
  if (const auto magic = read_be32(labels, 0, labels_path); magic != kLabelMagic)
    throw BadMagicError(fmt::format("'{}': label magic 0x{:08x}, expected 0x{:08x}", labels_path.string(), magic,
                                    kLabelMagic));

  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_images != n_labels)
    throw CountMismatchError(fmt::format("{} images but {} labels", n_images, n_labels));

  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n_images * pixels)
    throw TruncatedFileError(fmt::format("'{}' holds fewer than {} images", images_path.string(), n_images));
  if (labels.size() < 8 + n_labels)
    throw TruncatedFileError(fmt::format("'{}' holds fewer than {} labels", labels_path.string(), n_labels));
  if (n_images == 0) throw EmptyDatasetError(fmt::format("'{}' contains no images", images_path.string()));

  Dataset ds;
  ds.name = images_path.stem().string();
  ds.task = Task::classification;
  ds.features.resize(static_cast<Eigen::Index>(n_images), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < n_images * pixels; ++i)
    ds.features.data()[i] = static_cast<double>(images[16 + i]) / 255.0;
  ds.labels.resize(n_labels);
  int max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max(2, max_label + 1);
  return ds;
}

}  // namespace lossreg::data
