#pragma once

// On-disk formats. All binary formats are little-endian and versioned:
//
//   GLDV  descriptor sets   16-byte header (magic, version u16, reserved u16,
//                           dim u32, count u32), count*dim f32 row-major,
//                           count u64 sample ids, u8 label flag, then per
//                           sample u32 byte length (0xFFFFFFFF = unlabeled)
//                           and UTF-8 bytes when the flag is set
//   GLFT  feature stacks    magic, version u16, reserved u16, channels u32,
//                           height u32, width u32, C*H*W f32 channel-major
//   GPCA  projection model  magic, version u16, reserved u16, input u32,
//                           output u32, rank-deficient u8, then f64 mean,
//                           components, eigenvalues
//   index                   JSON manifest naming a GIDX blob; the manifest
//                           records the gallery checksum and byte offsets of
//                           the groups, descriptor, and projection sections
//
// Descriptors are stored as 32-bit floats and widened on load; group
// descriptors and the projection are stored at full 64-bit precision inside
// the index blob. Readers reject bad magic, unknown versions, truncation,
// and trailing bytes. Writers go through a temp file and rename.

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reidx/core.hpp"
#include "reidx/error.hpp"
#include "reidx/evaluation.hpp"
#include "reidx/descriptor.hpp"
#include "reidx/part_geometry.hpp"
#include "reidx/pca.hpp"
#include "reidx/retrieval.hpp"
#include "reidx/tdc.hpp"

namespace reidx {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

inline constexpr std::uint16_t kDescriptorFormatVersion = 1;
inline constexpr std::uint16_t kFeatureStackFormatVersion = 1;
inline constexpr std::uint16_t kPcaFormatVersion = 1;
inline constexpr std::uint16_t kIndexFormatVersion = 1;
inline constexpr std::uint32_t kNoLabelSentinel = 0xFFFFFFFFu;

namespace detail {

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* data, std::size_t n,
                       const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError(std::string("truncated file while reading ") + what);
    }
}

template <typename T>
void write_scalar(std::ostream& out, T v) {
    write_bytes(out, &v, sizeof(v));
}

template <typename T>
T read_scalar(std::istream& in, const char* what) {
    T v;
    read_bytes(in, &v, sizeof(v), what);
    return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4];
    read_bytes(in, got, 4, "magic");
    if (std::memcmp(got, magic, 4) != 0) {
        throw FormatError(std::string("bad magic, expected ") + magic);
    }
}

inline void expect_version(std::uint16_t got, std::uint16_t supported,
                           const char* format) {
    if (got != supported) {
        throw FormatError(std::string(format) + " version " + std::to_string(got) +
                          " unsupported (expected " + std::to_string(supported) + ")");
    }
}

inline void expect_eof(std::istream& in, const char* format) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(std::string(format) + " has trailing bytes");
    }
}

// Writers build the complete file under a temp name, then rename into place.
template <typename Fill>
void write_file_atomic(const std::filesystem::path& path, Fill&& fill) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        fill(out);
        out.flush();
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string() + " for reading");
    return in;
}

inline std::string fmt_double(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// Row/Id/Label map a row number to descriptor pointer, sample id, and
// optional label; shared by the gallery and query-batch writers.
template <typename Row, typename Id, typename Label>
void write_gldv(std::ostream& out, std::size_t count, std::size_t dim, Row row, Id id,
                Label label) {
    write_bytes(out, "GLDV", 4);
    write_scalar<std::uint16_t>(out, kDescriptorFormatVersion);
    write_scalar<std::uint16_t>(out, 0);
    write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
    write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(count));

    std::vector<float> frow(dim);
    for (std::size_t r = 0; r < count; ++r) {
        const double* src = row(r);
        for (std::size_t c = 0; c < dim; ++c) frow[c] = static_cast<float>(src[c]);
        write_bytes(out, frow.data(), dim * sizeof(float));
    }
    for (std::size_t r = 0; r < count; ++r) {
        write_scalar<std::uint64_t>(out, id(r));
    }
    bool any_label = false;
    for (std::size_t r = 0; r < count && !any_label; ++r) {
        any_label = label(r) != nullptr;
    }
    write_scalar<std::uint8_t>(out, any_label ? 1 : 0);
    if (any_label) {
        for (std::size_t r = 0; r < count; ++r) {
            const PersonLabel* l = label(r);
            if (!l) {
                write_scalar<std::uint32_t>(out, kNoLabelSentinel);
            } else {
                write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(l->size()));
                write_bytes(out, l->data(), l->size());
            }
        }
    }
}

struct GldvPayload {
    std::size_t dim = 0;
    std::size_t count = 0;
    std::vector<float> values;  // count x dim, row-major
    std::vector<SampleId> ids;
    std::vector<std::optional<PersonLabel>> labels;  // empty when unlabeled file
};

inline GldvPayload read_gldv(std::istream& in) {
    expect_magic(in, "GLDV");
    expect_version(read_scalar<std::uint16_t>(in, "version"), kDescriptorFormatVersion,
                   "descriptor file");
    read_scalar<std::uint16_t>(in, "reserved");
    GldvPayload p;
    p.dim = read_scalar<std::uint32_t>(in, "dim");
    p.count = read_scalar<std::uint32_t>(in, "count");
    if (p.dim == 0) throw FormatError("descriptor file declares dim 0");

    p.values.resize(p.count * p.dim);
    if (!p.values.empty()) {
        read_bytes(in, p.values.data(), p.values.size() * sizeof(float), "descriptors");
    }
    p.ids.resize(p.count);
    if (!p.ids.empty()) {
        read_bytes(in, p.ids.data(), p.ids.size() * sizeof(std::uint64_t), "sample ids");
    }
    const auto flag = read_scalar<std::uint8_t>(in, "label flag");
    if (flag > 1) throw FormatError("descriptor file label flag must be 0 or 1");
    if (flag == 1) {
        p.labels.resize(p.count);
        for (std::size_t r = 0; r < p.count; ++r) {
            const auto len = read_scalar<std::uint32_t>(in, "label length");
            if (len == kNoLabelSentinel) continue;
            std::string s(len, '\0');
            if (len > 0) read_bytes(in, s.data(), len, "label bytes");
            p.labels[r] = std::move(s);
        }
    }
    expect_eof(in, "descriptor file");
    return p;
}

}  // namespace detail

inline void write_gallery(const std::filesystem::path& path, const Gallery& gallery) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        detail::write_gldv(
            out, gallery.size(), gallery.dim(),
            [&](std::size_t r) { return gallery.descriptor(r).data(); },
            [&](std::size_t r) { return gallery.id(r); },
            [&](std::size_t r) {
                const auto& l = gallery.label(r);
                return l ? &*l : nullptr;
            });
    });
}

inline Gallery read_gallery(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    const auto p = detail::read_gldv(in);
    Gallery gallery(p.dim);
    DescriptorVector row(p.dim);
    for (std::size_t r = 0; r < p.count; ++r) {
        for (std::size_t c = 0; c < p.dim; ++c) {
            row[c] = static_cast<double>(p.values[r * p.dim + c]);
        }
        gallery.add(p.ids[r], p.labels.empty() ? std::nullopt : p.labels[r], row);
    }
    return gallery;
}

inline void write_queries(const std::filesystem::path& path, const QuerySet& queries) {
    if (queries.queries.empty()) {
        throw InvalidArgument("refusing to write an empty query batch");
    }
    const std::size_t dim = queries.queries.front().descriptor.size();
    for (const auto& q : queries.queries) {
        if (q.descriptor.size() != dim) throw DimensionMismatch(q.descriptor.size(), dim);
    }
    detail::write_file_atomic(path, [&](std::ostream& out) {
        detail::write_gldv(
            out, queries.queries.size(), dim,
            [&](std::size_t r) { return queries.queries[r].descriptor.data(); },
            [&](std::size_t r) { return queries.queries[r].id; },
            [&](std::size_t r) {
                const auto& l = queries.queries[r].label;
                return l ? &*l : nullptr;
            });
    });
}

inline QuerySet read_queries(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    const auto p = detail::read_gldv(in);
    QuerySet queries;
    queries.queries.resize(p.count);
    for (std::size_t r = 0; r < p.count; ++r) {
        Query& q = queries.queries[r];
        q.id = p.ids[r];
        q.descriptor.resize(p.dim);
        for (std::size_t c = 0; c < p.dim; ++c) {
            q.descriptor[c] = static_cast<double>(p.values[r * p.dim + c]);
        }
        if (!p.labels.empty()) q.label = p.labels[r];
    }
    return queries;
}

inline void write_feature_stack(const std::filesystem::path& path,
                                const FeatureMapStack& stack) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        detail::write_bytes(out, "GLFT", 4);
        detail::write_scalar<std::uint16_t>(out, kFeatureStackFormatVersion);
        detail::write_scalar<std::uint16_t>(out, 0);
        detail::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(stack.channels()));
        detail::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(stack.height()));
        detail::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(stack.width()));
        std::vector<float> plane(stack.height() * stack.width());
        for (std::size_t c = 0; c < stack.channels(); ++c) {
            const auto src = stack.channel(c);
            for (std::size_t i = 0; i < plane.size(); ++i) {
                plane[i] = static_cast<float>(src[i]);
            }
            detail::write_bytes(out, plane.data(), plane.size() * sizeof(float));
        }
    });
}

inline FeatureMapStack read_feature_stack(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    detail::expect_magic(in, "GLFT");
    detail::expect_version(detail::read_scalar<std::uint16_t>(in, "version"),
                           kFeatureStackFormatVersion, "feature stack");
    detail::read_scalar<std::uint16_t>(in, "reserved");
    const auto channels = detail::read_scalar<std::uint32_t>(in, "channels");
    const auto height = detail::read_scalar<std::uint32_t>(in, "height");
    const auto width = detail::read_scalar<std::uint32_t>(in, "width");
    if (channels == 0 || height == 0 || width == 0) {
        throw FormatError("feature stack dimensions must be positive");
    }
    const std::size_t total =
        static_cast<std::size_t>(channels) * height * width;
    std::vector<float> raw(total);
    detail::read_bytes(in, raw.data(), total * sizeof(float), "responses");
    detail::expect_eof(in, "feature stack");
    std::vector<double> responses(total);
    for (std::size_t i = 0; i < total; ++i) {
        if (!std::isfinite(raw[i])) throw FormatError("feature stack has non-finite response");
        responses[i] = static_cast<double>(raw[i]);
    }
    return FeatureMapStack(channels, height, width, std::move(responses));
}

inline void write_pca_model(const std::filesystem::path& path, const PcaModel& model) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        detail::write_bytes(out, "GPCA", 4);
        detail::write_scalar<std::uint16_t>(out, kPcaFormatVersion);
        detail::write_scalar<std::uint16_t>(out, 0);
        detail::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(model.input_dim));
        detail::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(model.output_dim));
        detail::write_scalar<std::uint8_t>(out, model.rank_deficient ? 1 : 0);
        detail::write_bytes(out, model.mean.data(), model.mean.size() * sizeof(double));
        detail::write_bytes(out, model.components.data(),
                            model.components.size() * sizeof(double));
        detail::write_bytes(out, model.eigenvalues.data(),
                            model.eigenvalues.size() * sizeof(double));
    });
}

inline PcaModel read_pca_model(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    detail::expect_magic(in, "GPCA");
    detail::expect_version(detail::read_scalar<std::uint16_t>(in, "version"),
                           kPcaFormatVersion, "projection model");
    detail::read_scalar<std::uint16_t>(in, "reserved");
    PcaModel model;
    model.input_dim = detail::read_scalar<std::uint32_t>(in, "input dim");
    model.output_dim = detail::read_scalar<std::uint32_t>(in, "output dim");
    if (model.input_dim == 0 || model.output_dim == 0 ||
        model.output_dim > model.input_dim) {
        throw FormatError("projection model dimensions are inconsistent");
    }
    model.rank_deficient = detail::read_scalar<std::uint8_t>(in, "rank flag") != 0;
    model.mean.resize(model.input_dim);
    detail::read_bytes(in, model.mean.data(), model.mean.size() * sizeof(double), "mean");
    model.components.resize(model.output_dim * model.input_dim);
    detail::read_bytes(in, model.components.data(),
                       model.components.size() * sizeof(double), "components");
    model.eigenvalues.resize(model.output_dim);
    detail::read_bytes(in, model.eigenvalues.data(),
                       model.eigenvalues.size() * sizeof(double), "eigenvalues");
    detail::expect_eof(in, "projection model");
    return model;
}

namespace detail {

inline void write_pca_section(std::ostream& out, const PcaModel& model) {
    write_scalar<std::uint64_t>(out, model.input_dim);
    write_scalar<std::uint64_t>(out, model.output_dim);
    write_scalar<std::uint8_t>(out, model.rank_deficient ? 1 : 0);
    write_bytes(out, model.mean.data(), model.mean.size() * sizeof(double));
    write_bytes(out, model.components.data(), model.components.size() * sizeof(double));
    write_bytes(out, model.eigenvalues.data(), model.eigenvalues.size() * sizeof(double));
}

inline std::string to_hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t from_hex_u64(const std::string& s) {
    if (s.empty() || s.size() > 16) throw FormatError("bad digest string: " + s);
    std::uint64_t v = 0;
    for (char ch : s) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'a' && c <= 'f') digit = 10 + (c - 'a');
        else throw FormatError("bad digest string: " + s);
        v = (v << 4) | static_cast<std::uint64_t>(digit);
    }
    return v;
}

}  // namespace detail

// Manifest naming the blob and locating its sections by absolute offset.
struct IndexManifest {
    std::uint16_t version = kIndexFormatVersion;
    std::uint64_t gallery_digest = 0;
    double theta = 0.0;
    std::size_t full_dim = 0;
    std::size_t reduced_dim = 0;
    std::size_t group_count = 0;
    std::string blob_file;

    struct Section {
        std::uint64_t offset = 0;
        std::uint64_t bytes = 0;
    };
    Section groups, descriptors_full, descriptors_reduced, pca;
};

inline void save_index(const GroupIndex& index, const std::filesystem::path& manifest_path) {
    const std::filesystem::path blob_path =
        manifest_path.parent_path() / (manifest_path.stem().string() + ".bin");

    std::ostringstream groups_bytes;
    for (const auto& g : index.groups) {
        detail::write_scalar<std::uint64_t>(groups_bytes, g.members.size());
        detail::write_scalar<double>(groups_bytes, g.dissimilarity);
        detail::write_bytes(groups_bytes, g.members.data(),
                            g.members.size() * sizeof(SampleId));
    }
    std::ostringstream pca_bytes;
    detail::write_pca_section(pca_bytes, index.pca);

    IndexManifest m;
    m.gallery_digest = index.source_digest;
    m.theta = index.theta;
    m.full_dim = index.full_dim;
    m.reduced_dim = index.reduced_dim;
    m.group_count = index.group_count();
    m.blob_file = blob_path.filename().string();

    const std::string groups_str = groups_bytes.str();
    const std::string pca_str = pca_bytes.str();
    std::uint64_t offset = 8;  // blob magic + version + reserved
    m.groups = {offset, groups_str.size()};
    offset += m.groups.bytes;
    m.descriptors_full = {offset, index.descriptors_full.size() * sizeof(double)};
    offset += m.descriptors_full.bytes;
    m.descriptors_reduced = {offset, index.descriptors_reduced.size() * sizeof(double)};
    offset += m.descriptors_reduced.bytes;
    m.pca = {offset, pca_str.size()};
    offset += m.pca.bytes;

    detail::write_file_atomic(blob_path, [&](std::ostream& out) {
        detail::write_bytes(out, "GIDX", 4);
        detail::write_scalar<std::uint16_t>(out, kIndexFormatVersion);
        detail::write_scalar<std::uint16_t>(out, 0);
        detail::write_bytes(out, groups_str.data(), groups_str.size());
        detail::write_bytes(out, index.descriptors_full.data(),
                            index.descriptors_full.size() * sizeof(double));
        detail::write_bytes(out, index.descriptors_reduced.data(),
                            index.descriptors_reduced.size() * sizeof(double));
        detail::write_bytes(out, pca_str.data(), pca_str.size());
    });

    nlohmann::json sections = {
        {"groups", {{"offset", m.groups.offset}, {"bytes", m.groups.bytes}}},
        {"descriptors_full",
         {{"offset", m.descriptors_full.offset}, {"bytes", m.descriptors_full.bytes}}},
        {"descriptors_reduced",
         {{"offset", m.descriptors_reduced.offset}, {"bytes", m.descriptors_reduced.bytes}}},
        {"pca", {{"offset", m.pca.offset}, {"bytes", m.pca.bytes}}},
    };
    nlohmann::json j = {
        {"format", "reidx-index"},
        {"version", m.version},
        {"gallery_digest", detail::to_hex_u64(m.gallery_digest)},
        {"theta", m.theta},
        {"full_dim", m.full_dim},
        {"reduced_dim", m.reduced_dim},
        {"group_count", m.group_count},
        {"blob", m.blob_file},
        {"blob_bytes", offset},
        {"sections", sections},
    };
    detail::write_file_atomic(manifest_path, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
}

// Loads and validates an index against the gallery it will serve. The
// manifest's gallery checksum must match; member rows are rebuilt here.
inline GroupIndex load_index(const std::filesystem::path& manifest_path,
                             const Gallery& gallery) {
    nlohmann::json j;
    {
        auto in = detail::open_for_read(manifest_path);
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("manifest parse error: " + std::string(e.what()));
        }
    }

    GroupIndex index;
    IndexManifest m;
    try {
        if (j.at("format").get<std::string>() != "reidx-index") {
            throw FormatError("not an index manifest");
        }
        detail::expect_version(j.at("version").get<std::uint16_t>(), kIndexFormatVersion,
                               "index manifest");
        m.gallery_digest = detail::from_hex_u64(j.at("gallery_digest").get<std::string>());
        m.theta = j.at("theta").get<double>();
        m.full_dim = j.at("full_dim").get<std::size_t>();
        m.reduced_dim = j.at("reduced_dim").get<std::size_t>();
        m.group_count = j.at("group_count").get<std::size_t>();
        m.blob_file = j.at("blob").get<std::string>();
        const auto& sections = j.at("sections");
        auto section = [&](const char* name) {
            const auto& s = sections.at(name);
            return IndexManifest::Section{s.at("offset").get<std::uint64_t>(),
                                          s.at("bytes").get<std::uint64_t>()};
        };
        m.groups = section("groups");
        m.descriptors_full = section("descriptors_full");
        m.descriptors_reduced = section("descriptors_reduced");
        m.pca = section("pca");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest field error: " + std::string(e.what()));
    }

    if (m.group_count == 0) throw FormatError("index manifest declares zero groups");
    if (m.full_dim == 0 || m.reduced_dim == 0 || m.reduced_dim > m.full_dim) {
        throw FormatError("index manifest dimensions are inconsistent");
    }
    const std::uint64_t actual_digest = gallery_digest(gallery);
    if (m.gallery_digest != actual_digest) {
        throw FormatError("gallery checksum mismatch: manifest " +
                          detail::to_hex_u64(m.gallery_digest) + ", gallery " +
                          detail::to_hex_u64(actual_digest));
    }
    if (m.descriptors_full.bytes != m.group_count * m.full_dim * sizeof(double) ||
        m.descriptors_reduced.bytes != m.group_count * m.reduced_dim * sizeof(double)) {
        throw FormatError("descriptor section sizes do not match manifest counts");
    }

    index.theta = m.theta;
    index.full_dim = m.full_dim;
    index.reduced_dim = m.reduced_dim;
    index.source_digest = m.gallery_digest;

    const std::filesystem::path blob_path = manifest_path.parent_path() / m.blob_file;
    auto in = detail::open_for_read(blob_path);
    detail::expect_magic(in, "GIDX");
    detail::expect_version(detail::read_scalar<std::uint16_t>(in, "version"),
                           kIndexFormatVersion, "index blob");
    detail::read_scalar<std::uint16_t>(in, "reserved");

    in.seekg(static_cast<std::streamoff>(m.groups.offset));
    index.groups.resize(m.group_count);
    for (auto& g : index.groups) {
        const auto members = detail::read_scalar<std::uint64_t>(in, "group size");
        if (members == 0) throw FormatError("index blob contains an empty group");
        g.dissimilarity = detail::read_scalar<double>(in, "group dissimilarity");
        g.members.resize(members);
        detail::read_bytes(in, g.members.data(), members * sizeof(SampleId), "group members");
    }
    if (static_cast<std::uint64_t>(in.tellg()) != m.groups.offset + m.groups.bytes) {
        throw FormatError("group section size does not match manifest");
    }

    in.seekg(static_cast<std::streamoff>(m.descriptors_full.offset));
    index.descriptors_full.resize(m.group_count * m.full_dim);
    detail::read_bytes(in, index.descriptors_full.data(),
                       index.descriptors_full.size() * sizeof(double), "group descriptors");

    in.seekg(static_cast<std::streamoff>(m.descriptors_reduced.offset));
    index.descriptors_reduced.resize(m.group_count * m.reduced_dim);
    detail::read_bytes(in, index.descriptors_reduced.data(),
                       index.descriptors_reduced.size() * sizeof(double),
                       "reduced group descriptors");

    in.seekg(static_cast<std::streamoff>(m.pca.offset));
    index.pca.input_dim = detail::read_scalar<std::uint64_t>(in, "projection input dim");
    index.pca.output_dim = detail::read_scalar<std::uint64_t>(in, "projection output dim");
    if (index.pca.input_dim != index.full_dim || index.pca.output_dim != index.reduced_dim) {
        throw FormatError("projection dimensions do not match index dimensions");
    }
    index.pca.rank_deficient = detail::read_scalar<std::uint8_t>(in, "rank flag") != 0;
    index.pca.mean.resize(index.pca.input_dim);
    detail::read_bytes(in, index.pca.mean.data(), index.pca.mean.size() * sizeof(double),
                       "projection mean");
    index.pca.components.resize(index.pca.output_dim * index.pca.input_dim);
    detail::read_bytes(in, index.pca.components.data(),
                       index.pca.components.size() * sizeof(double), "projection components");
    index.pca.eigenvalues.resize(index.pca.output_dim);
    detail::read_bytes(in, index.pca.eigenvalues.data(),
                       index.pca.eigenvalues.size() * sizeof(double), "projection eigenvalues");
    detail::expect_eof(in, "index blob");

    try {
        attach_gallery_rows(index, gallery);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("index does not match gallery: ") + e.what());
    }
    return index;
}

struct KeypointRecord {
    SampleId id = 0;
    KeypointSet keypoints;
};

// CSV columns: id, x1,y1 (upper head), x2,y2 (neck), x3,y3 (left hip),
// x4,y4 (right hip), width, height. Header row optional. Coordinates are
// clamped into the frame at ingest.
inline std::vector<KeypointRecord> read_keypoints_csv(const std::filesystem::path& path) {
    auto in = detail::open_for_read(path);
    std::vector<KeypointRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (line_no == 1 && !fields.empty() &&
            fields.front().find_first_not_of("0123456789 \t") != std::string::npos) {
            continue;  // header row
        }
        if (fields.size() != 11) {
            throw FormatError("keypoints line " + std::to_string(line_no) + ": expected 11 fields, got " +
                              std::to_string(fields.size()));
        }
        try {
            KeypointRecord rec;
            rec.id = std::stoull(fields[0]);
            const double x1 = std::stod(fields[1]), y1 = std::stod(fields[2]);
            const double x2 = std::stod(fields[3]), y2 = std::stod(fields[4]);
            const double x3 = std::stod(fields[5]), y3 = std::stod(fields[6]);
            const double x4 = std::stod(fields[7]), y4 = std::stod(fields[8]);
            const int width = std::stoi(fields[9]);
            const int height = std::stoi(fields[10]);
            if (width <= 0 || height <= 0) {
                throw FormatError("keypoints line " + std::to_string(line_no) +
                                  ": frame size must be positive");
            }
            KeypointSet k;
            k.upper_head = {x1, y1};
            k.neck = {x2, y2};
            k.left_hip = {x3, y3};
            k.right_hip = {x4, y4};
            k.image_width = width;
            k.image_height = height;
            rec.keypoints = clamp_keypoints(k);
            records.push_back(rec);
        } catch (const std::logic_error&) {
            throw FormatError("keypoints line " + std::to_string(line_no) + ": unparsable field");
        }
    }
    return records;
}

inline void write_keypoints_csv(const std::filesystem::path& path,
                                std::span<const KeypointRecord> records) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        out << "id,x1,y1,x2,y2,x3,y3,x4,y4,width,height\n";
        for (const auto& rec : records) {
            const auto& k = rec.keypoints;
            out << rec.id;
            for (double v : {k.upper_head.x, k.upper_head.y, k.neck.x, k.neck.y,
                             k.left_hip.x, k.left_hip.y, k.right_hip.x, k.right_hip.y}) {
                out << ',' << detail::fmt_double(v, "%.17g");
            }
            out << ',' << k.image_width << ',' << k.image_height << '\n';
        }
    });
}

// One query per line: query id, then ranked id:distance pairs, distances at
// 9 significant digits.
inline void write_results(const std::filesystem::path& path,
                          std::span<const std::pair<SampleId, RankList>> results) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        for (const auto& [query_id, list] : results) {
            out << query_id;
            for (const auto& entry : list) {
                out << ' ' << entry.id << ':' << detail::fmt_double(entry.distance, "%.9g");
            }
            out << '\n';
        }
    });
}

inline void write_report_text(const std::filesystem::path& path, const EvalReport& report) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        out << "queries evaluated: " << report.evaluated << " (skipped: " << report.skipped
            << ")\n";
        out << "mAP: " << detail::fmt_double(report.map, "%.6f") << "\n";
        for (const auto& [rank, value] : report.cmc) {
            out << "CMC rank-" << rank << ": " << detail::fmt_double(value, "%.6f") << "\n";
        }
        double objective_mean = 0.0;
        for (auto v : report.objective_values) objective_mean += static_cast<double>(v);
        if (!report.objective_values.empty()) {
            objective_mean /= static_cast<double>(report.objective_values.size());
        }
        out << "objective mean: " << detail::fmt_double(objective_mean, "%.3f") << "\n";
        out << "mean query time: " << detail::fmt_double(report.mean_total_ms(), "%.3f")
            << " ms (projection " << detail::fmt_double(report.mean_projection_ms, "%.3f")
            << ", coarse " << detail::fmt_double(report.mean_coarse_ms, "%.3f") << ", fine "
            << detail::fmt_double(report.mean_fine_ms, "%.3f") << ")\n";
    });
}

inline void write_report_kv(const std::filesystem::path& path, const EvalReport& report) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        out << "map=" << detail::fmt_double(report.map, "%.17g") << "\n";
        out << "evaluated=" << report.evaluated << "\n";
        out << "skipped=" << report.skipped << "\n";
        for (const auto& [rank, value] : report.cmc) {
            out << "cmc_" << rank << "=" << detail::fmt_double(value, "%.17g") << "\n";
        }
        double objective_mean = 0.0;
        for (auto v : report.objective_values) objective_mean += static_cast<double>(v);
        if (!report.objective_values.empty()) {
            objective_mean /= static_cast<double>(report.objective_values.size());
        }
        out << "objective_mean=" << detail::fmt_double(objective_mean, "%.17g") << "\n";
        out << "mean_projection_ms=" << detail::fmt_double(report.mean_projection_ms, "%.17g")
            << "\n";
        out << "mean_coarse_ms=" << detail::fmt_double(report.mean_coarse_ms, "%.17g") << "\n";
        out << "mean_fine_ms=" << detail::fmt_double(report.mean_fine_ms, "%.17g") << "\n";
        out << "mean_total_ms=" << detail::fmt_double(report.mean_total_ms(), "%.17g") << "\n";
    });
}

inline void write_cmc_csv(const std::filesystem::path& path, const EvalReport& report) {
    detail::write_file_atomic(path, [&](std::ostream& out) {
        out << "rank,cmc\n";
        for (const auto& [rank, value] : report.cmc) {
            out << rank << ',' << detail::fmt_double(value, "%.9g") << '\n';
        }
    });
}

}  // namespace reidx
