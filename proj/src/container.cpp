#include "kineme/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "kineme/common.hpp"

namespace kineme {

namespace {

constexpr char kMagic[8] = {'K', 'I', 'N', 'E', 'C', 'N', 'T', 'R'};

static_assert(std::endian::native == std::endian::little,
              "container writer assumes a little-endian host");

template <typename T>
void append_raw(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T read_raw(const std::string& bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw DataError("container truncated");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

void write_container(const std::string& path, const Container& c) {
    // Blob first so header can carry offsets.
    std::string blob;
    nlohmann::json matrices_meta = nlohmann::json::object();
    for (const auto& [name, mat] : c.matrices) {
        matrices_meta[name] = {{"rows", mat.rows()},
                               {"cols", mat.cols()},
                               {"offset", blob.size()}};
        const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(mat.size());
        const std::size_t old = blob.size();
        blob.resize(old + bytes);
        if (bytes > 0) std::memcpy(blob.data() + old, mat.data(), bytes);
    }

    nlohmann::json header = c.meta;
    header["matrices"] = matrices_meta;
    const std::string header_str = header.dump();

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    append_raw<std::uint32_t>(out, kContainerVersion);
    append_raw<std::uint32_t>(out, c.kind);
    append_raw<std::uint64_t>(out, header_str.size());
    out += header_str;
    append_raw<std::uint64_t>(out, blob.size());
    out += blob;
    append_raw<std::uint64_t>(out, fnv1a64(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write failed: " + path);
}

Container read_container(const std::string& path, std::uint32_t expected_kind) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    if (bytes.size() < sizeof(kMagic) + 2 * sizeof(std::uint32_t)) {
        throw DataError("container truncated: " + path);
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("not a kineme container: " + path);
    }
    pos = sizeof(kMagic);
    const auto version = read_raw<std::uint32_t>(bytes, pos);
    if (version != kContainerVersion) {
        throw DataError("unsupported container version " + std::to_string(version) +
                        " (expected " + std::to_string(kContainerVersion) + "): " + path);
    }

    // Checksum over everything but the trailing u64.
    if (bytes.size() < sizeof(std::uint64_t)) throw DataError("container truncated: " + path);
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, sizeof(stored));
    if (fnv1a64(bytes.data(), body) != stored) {
        throw DataError("container checksum mismatch (truncated or corrupt): " + path);
    }

    Container c;
    c.kind = read_raw<std::uint32_t>(bytes, pos);
    if (c.kind != expected_kind) {
        throw DataError("container kind mismatch in " + path);
    }
    const auto header_len = read_raw<std::uint64_t>(bytes, pos);
    if (pos + header_len > body) throw DataError("container truncated: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("container header parse error: ") + e.what());
    }
    pos += header_len;
    const auto blob_len = read_raw<std::uint64_t>(bytes, pos);
    if (pos + blob_len > body) throw DataError("container truncated: " + path);
    const char* blob = bytes.data() + pos;

    if (header.contains("matrices")) {
        for (auto it = header["matrices"].begin(); it != header["matrices"].end(); ++it) {
            const auto rows = it.value().at("rows").get<Eigen::Index>();
            const auto cols = it.value().at("cols").get<Eigen::Index>();
            const auto offset = it.value().at("offset").get<std::size_t>();
            const std::size_t need = sizeof(double) * static_cast<std::size_t>(rows * cols);
            if (offset + need > blob_len) throw DataError("container matrix out of range: " + it.key());
            Eigen::MatrixXd m(rows, cols);
            if (need > 0) std::memcpy(m.data(), blob + offset, need);
            c.matrices.emplace(it.key(), std::move(m));
        }
        header.erase("matrices");
    }
    c.meta = std::move(header);
    return c;
}

}  // namespace kineme
