#include "pcat/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

#include "pcat/errors.hpp"

namespace pcat {
namespace {

// NIfTI-1 header, 348 bytes, natural alignment inserts no padding.
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;
constexpr std::int16_t kDtInt8 = 256;
constexpr std::int16_t kDtUint16 = 512;
constexpr std::int16_t kDtUint32 = 768;

template <typename T>
void byte_swap(T& value) {
  auto* bytes = reinterpret_cast<unsigned char*>(&value);
  std::reverse(bytes, bytes + sizeof(T));
}

void swap_header(Nifti1Header& h) {
  byte_swap(h.sizeof_hdr);
  byte_swap(h.extents);
  byte_swap(h.session_error);
  for (auto& d : h.dim) byte_swap(d);
  byte_swap(h.intent_p1);
  byte_swap(h.intent_p2);
  byte_swap(h.intent_p3);
  byte_swap(h.intent_code);
  byte_swap(h.datatype);
  byte_swap(h.bitpix);
  byte_swap(h.slice_start);
  for (auto& p : h.pixdim) byte_swap(p);
  byte_swap(h.vox_offset);
  byte_swap(h.scl_slope);
  byte_swap(h.scl_inter);
  byte_swap(h.slice_end);
  byte_swap(h.cal_max);
  byte_swap(h.cal_min);
  byte_swap(h.slice_duration);
  byte_swap(h.toffset);
  byte_swap(h.glmax);
  byte_swap(h.glmin);
  byte_swap(h.qform_code);
  byte_swap(h.sform_code);
  byte_swap(h.quatern_b);
  byte_swap(h.quatern_c);
  byte_swap(h.quatern_d);
  byte_swap(h.qoffset_x);
  byte_swap(h.qoffset_y);
  byte_swap(h.qoffset_z);
  for (auto& v : h.srow_x) byte_swap(v);
  for (auto& v : h.srow_y) byte_swap(v);
  for (auto& v : h.srow_z) byte_swap(v);
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzPtr = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

[[noreturn]] void malformed(const std::string& path, const std::string& why) {
  throw IoError("malformed volume '" + path + "': " + why);
}

int bytes_per_voxel(std::int16_t datatype, const std::string& path) {
  switch (datatype) {
    case kDtUint8:
    case kDtInt8:
      return 1;
    case kDtInt16:
    case kDtUint16:
      return 2;
    case kDtInt32:
    case kDtUint32:
    case kDtFloat32:
      return 4;
    case kDtFloat64:
      return 8;
    default:
      malformed(path, "unsupported datatype code " + std::to_string(datatype));
  }
}

struct RawVolume {
  Index3 dims;
  std::array<std::array<double, 3>, 3> direction;  // column c = world step of index axis c
  Vec3 translation;
  std::vector<double> values;  // slope/intercept applied, x-fastest
};

double decode_at(const std::vector<unsigned char>& raw, std::size_t idx, std::int16_t datatype,
                 bool swap) {
  auto fetch = [&](auto tag) {
    using T = decltype(tag);
    T v;
    std::memcpy(&v, raw.data() + idx * sizeof(T), sizeof(T));
    if (swap) byte_swap(v);
    return static_cast<double>(v);
  };
  switch (datatype) {
    case kDtUint8:
      return fetch(std::uint8_t{});
    case kDtInt8:
      return fetch(std::int8_t{});
    case kDtInt16:
      return fetch(std::int16_t{});
    case kDtUint16:
      return fetch(std::uint16_t{});
    case kDtInt32:
      return fetch(std::int32_t{});
    case kDtUint32:
      return fetch(std::uint32_t{});
    case kDtFloat32:
      return fetch(float{});
    default:
      return fetch(double{});
  }
}

RawVolume read_raw(const std::string& path) {
  GzPtr file(gzopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open volume '" + path + "'");

  Nifti1Header h{};
  if (gzread(file.get(), &h, sizeof(h)) != static_cast<int>(sizeof(h)))
    malformed(path, "file shorter than the 348-byte header");

  bool swap = false;
  if (h.sizeof_hdr != 348) {
    swap = true;
    swap_header(h);
    if (h.sizeof_hdr != 348) malformed(path, "bad sizeof_hdr (not a NIfTI-1 file)");
  }
  if (std::strncmp(h.magic, "n+1", 4) != 0) {
    if (std::strncmp(h.magic, "ni1", 4) == 0)
      malformed(path, "detached .hdr/.img pairs are not supported");
    malformed(path, "missing n+1 magic");
  }

  if (h.dim[0] < 3 || h.dim[0] > 7) malformed(path, "not a 3D volume (dim[0]=" + std::to_string(h.dim[0]) + ")");
  for (int a = h.dim[0]; a > 3; --a) {
    if (h.dim[a] > 1)
      malformed(path, "multi-frame (4D+) volumes are not supported");
  }
  Index3 dims{h.dim[1], h.dim[2], h.dim[3]};
  for (int a = 0; a < 3; ++a)
    if (dims[a] <= 0) malformed(path, "non-positive dimension");

  // Direction matrix and translation from sform, else qform, else pixdim.
  std::array<std::array<double, 3>, 3> M{};
  Vec3 t{0, 0, 0};
  if (h.sform_code > 0) {
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = rows[r][c];
      t[r] = rows[r][3];
    }
  } else if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0 ? std::sqrt(a2) : 0.0;
    const double qfac = (h.pixdim[0] < 0) ? -1.0 : 1.0;
    const double R[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * b * c - 2 * a * d, 2 * b * d + 2 * a * c},
        {2 * b * c + 2 * a * d, a * a + c * c - b * b - d * d, 2 * c * d - 2 * a * b},
        {2 * b * d - 2 * a * c, 2 * c * d + 2 * a * b, a * a + d * d - b * b - c * c}};
    const double scale[3] = {h.pixdim[1], h.pixdim[2], qfac * h.pixdim[3]};
    for (int r = 0; r < 3; ++r)
      for (int c2 = 0; c2 < 3; ++c2) M[r][c2] = R[r][c2] * scale[c2];
    t = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
  } else {
    for (int a = 0; a < 3; ++a) M[a][a] = h.pixdim[a + 1];
  }
  for (int c = 0; c < 3; ++c) {
    const double norm = std::sqrt(M[0][c] * M[0][c] + M[1][c] * M[1][c] + M[2][c] * M[2][c]);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw IoError("volume '" + path + "' has non-positive voxel spacing along axis " +
                    std::to_string(c));
  }

  const int bpv = bytes_per_voxel(h.datatype, path);
  if (h.vox_offset < 348) malformed(path, "vox_offset before end of header");
  const long skip = static_cast<long>(h.vox_offset) - static_cast<long>(sizeof(h));
  if (skip > 0) {
    std::vector<char> scratch(static_cast<std::size_t>(skip));
    if (gzread(file.get(), scratch.data(), static_cast<unsigned>(skip)) != skip)
      malformed(path, "truncated before voxel data");
  }

  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<unsigned char> raw(n * static_cast<std::size_t>(bpv));
  std::size_t got = 0;
  while (got < raw.size()) {
    const unsigned chunk = static_cast<unsigned>(
        std::min<std::size_t>(raw.size() - got, 1u << 30));
    const int r = gzread(file.get(), raw.data() + got, chunk);
    if (r <= 0) malformed(path, "truncated voxel data");
    got += static_cast<std::size_t>(r);
  }

  const double slope = (h.scl_slope == 0.0f) ? 1.0 : h.scl_slope;
  const double inter = h.scl_inter;
  RawVolume out;
  out.dims = dims;
  out.direction = M;
  out.translation = t;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = decode_at(raw, i, h.datatype, swap) * slope + inter;
  return out;
}

struct AxisMap {
  std::array<int, 3> source_axis;  // world axis w <- data axis source_axis[w]
  std::array<int, 3> sign;         // +1 or -1 along the source axis
};

// Closest axis permutation/flip for the direction matrix.
AxisMap closest_axes(const std::array<std::array<double, 3>, 3>& M) {
  std::array<std::array<double, 3>, 3> N{};
  for (int c = 0; c < 3; ++c) {
    const double norm = std::sqrt(M[0][c] * M[0][c] + M[1][c] * M[1][c] + M[2][c] * M[2][c]);
    for (int r = 0; r < 3; ++r) N[r][c] = M[r][c] / norm;
  }
  AxisMap map{{-1, -1, -1}, {0, 0, 0}};
  std::array<bool, 3> row_used{}, col_used{};
  for (int pick = 0; pick < 3; ++pick) {
    int best_r = -1, best_c = -1;
    double best = -1.0;
    for (int r = 0; r < 3; ++r) {
      if (row_used[r]) continue;
      for (int c = 0; c < 3; ++c) {
        if (col_used[c]) continue;
        if (std::abs(N[r][c]) > best) {
          best = std::abs(N[r][c]);
          best_r = r;
          best_c = c;
        }
      }
    }
    row_used[best_r] = col_used[best_c] = true;
    map.source_axis[best_r] = best_c;
    map.sign[best_r] = (N[best_r][best_c] >= 0) ? 1 : -1;
  }
  return map;
}

template <typename T, typename Convert>
VoxelGrid<T> canonicalize(const RawVolume& raw, Convert convert) {
  const AxisMap map = closest_axes(raw.direction);

  Index3 dims{};
  Vec3 spacing{};
  for (int w = 0; w < 3; ++w) {
    const int c = map.source_axis[w];
    dims[w] = raw.dims[c];
    spacing[w] = std::sqrt(raw.direction[0][c] * raw.direction[0][c] +
                           raw.direction[1][c] * raw.direction[1][c] +
                           raw.direction[2][c] * raw.direction[2][c]);
  }

  // Old index of the new (0,0,0) corner, then its world position via the
  // full affine; off-axis residue of oblique affines is dropped here.
  Index3 corner{};
  for (int w = 0; w < 3; ++w) {
    const int c = map.source_axis[w];
    corner[c] = (map.sign[w] > 0) ? 0 : raw.dims[c] - 1;
  }
  Vec3 origin{};
  for (int r = 0; r < 3; ++r) {
    origin[r] = raw.translation[r];
    for (int c = 0; c < 3; ++c) origin[r] += raw.direction[r][c] * static_cast<double>(corner[c]);
  }

  VoxelGrid<T> grid(dims, spacing, origin);
  const Index3& sd = raw.dims;
  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(sd[0]);
  const std::size_t sz = static_cast<std::size_t>(sd[0]) * sd[1];
  const std::size_t strides[3] = {sx, sy, sz};

  std::size_t out = 0;
  Index3 old{};
  for (std::int64_t k = 0; k < dims[2]; ++k) {
    old[map.source_axis[2]] = (map.sign[2] > 0) ? k : sd[map.source_axis[2]] - 1 - k;
    for (std::int64_t j = 0; j < dims[1]; ++j) {
      old[map.source_axis[1]] = (map.sign[1] > 0) ? j : sd[map.source_axis[1]] - 1 - j;
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        old[map.source_axis[0]] = (map.sign[0] > 0) ? i : sd[map.source_axis[0]] - 1 - i;
        const std::size_t src = static_cast<std::size_t>(old[0]) * strides[0] +
                                static_cast<std::size_t>(old[1]) * strides[1] +
                                static_cast<std::size_t>(old[2]) * strides[2];
        grid[out++] = convert(raw.values[src]);
      }
    }
  }
  return grid;
}

std::uint32_t to_label(double v, const std::string& path) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-3 || r < 0 || r > static_cast<double>(std::numeric_limits<std::uint32_t>::max()))
    throw IoError("label volume '" + path + "' contains non-integer or negative value");
  return static_cast<std::uint32_t>(r);
}

class Sink {
public:
  explicit Sink(const std::string& path) : path_(path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
      gz_ = gzopen(path.c_str(), "wb6");
      if (!gz_) throw IoError("cannot open '" + path + "' for writing");
    } else {
      stream_.open(path, std::ios::binary);
      if (!stream_) throw IoError("cannot open '" + path + "' for writing");
    }
  }
  ~Sink() {
    if (gz_) gzclose(gz_);
  }
  void write(const void* data, std::size_t n) {
    if (gz_) {
      if (gzwrite(gz_, data, static_cast<unsigned>(n)) != static_cast<int>(n))
        throw IoError("write failed for '" + path_ + "'");
    } else {
      stream_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
      if (!stream_) throw IoError("write failed for '" + path_ + "'");
    }
  }

private:
  std::string path_;
  gzFile gz_ = nullptr;
  std::ofstream stream_;
};

template <typename Grid>
Nifti1Header make_header(const Grid& grid, std::int16_t datatype, std::int16_t bitpix) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) h.dim[a + 1] = static_cast<std::int16_t>(grid.dims()[a]);
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  for (int a = 0; a < 3; ++a) h.pixdim[a + 1] = static_cast<float>(grid.spacing()[a]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // mm
  h.qform_code = 0;
  h.sform_code = 1;
  h.srow_x[0] = static_cast<float>(grid.spacing()[0]);
  h.srow_y[1] = static_cast<float>(grid.spacing()[1]);
  h.srow_z[2] = static_cast<float>(grid.spacing()[2]);
  h.srow_x[3] = static_cast<float>(grid.origin()[0]);
  h.srow_y[3] = static_cast<float>(grid.origin()[1]);
  h.srow_z[3] = static_cast<float>(grid.origin()[2]);
  std::strncpy(h.descrip, "pcat", sizeof(h.descrip) - 1);
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

template <typename Grid, typename Stored>
void write_nifti(const std::string& path, const Grid& grid, std::int16_t datatype) {
  for (int a = 0; a < 3; ++a)
    if (grid.dims()[a] > std::numeric_limits<std::int16_t>::max())
      throw IoError("dimension too large for NIfTI-1: " + std::to_string(grid.dims()[a]));
  Nifti1Header h = make_header(grid, datatype, static_cast<std::int16_t>(sizeof(Stored) * 8));
  Sink sink(path);
  sink.write(&h, sizeof(h));
  const char ext[4] = {0, 0, 0, 0};
  sink.write(ext, 4);
  std::vector<Stored> buffer(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) buffer[i] = static_cast<Stored>(grid[i]);
  sink.write(buffer.data(), buffer.size() * sizeof(Stored));
}

}  // namespace

ImageGrid load_volume(const std::string& path) {
  const RawVolume raw = read_raw(path);
  return canonicalize<float>(raw, [](double v) { return static_cast<float>(v); });
}

LabelGrid load_label_volume(const std::string& path) {
  const RawVolume raw = read_raw(path);
  return canonicalize<std::uint32_t>(raw, [&](double v) { return to_label(v, path); });
}

BinaryMask load_mask(const std::string& path, std::uint32_t label) {
  const RawVolume raw = read_raw(path);
  return canonicalize<std::uint8_t>(raw, [&](double v) {
    const std::uint32_t lab = to_label(v, path);
    return static_cast<std::uint8_t>(label == 0 ? (lab != 0) : (lab == label));
  });
}

void save_volume(const std::string& path, const ImageGrid& image) {
  write_nifti<ImageGrid, float>(path, image, kDtFloat32);
}

void save_mask(const std::string& path, const BinaryMask& mask) {
  write_nifti<BinaryMask, std::uint8_t>(path, mask, kDtUint8);
}

void save_labels(const std::string& path, const LabelGrid& labels) {
  write_nifti<LabelGrid, std::int32_t>(path, labels, kDtInt32);
}

}  // namespace pcat
