// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrpyr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include "hdrpyr/errors.hpp"

namespace hdrpyr {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw CheckpointTruncatedError("checkpoint ends mid-field");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

struct Record {
    std::vector<int> shape;
    std::vector<float> data;
};

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");

    os.write(kCheckpointMagic, 4);
    write_u32(os, kCheckpointVersion);
    const char ordering = static_cast<char>(bundle.ordering);
    os.write(&ordering, 1);

    for (const auto& [name, t] : bundle.named_params()) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    if (!os) throw IoError("write failure on '" + path + "'");
}

ModelBundle load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");

    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw CheckpointFormatError("'" + path + "' is not a checkpoint (bad magic)");
    }
    const std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion) {
        throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                     " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    char ordering_byte = 0;
    is.read(&ordering_byte, 1);
    if (is.gcount() != 1) throw CheckpointTruncatedError("checkpoint missing ordering byte");
    if (ordering_byte != 0 && ordering_byte != 1) {
        throw CheckpointFormatError("invalid ordering byte " +
                                    std::to_string(static_cast<int>(ordering_byte)));
    }

    std::map<std::string, Record> records;
    while (true) {
        is.peek();
        if (is.eof()) break;
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (is.gcount() != static_cast<std::streamsize>(name_len)) {
            throw CheckpointTruncatedError("checkpoint ends mid-name");
        }
        const std::uint32_t rank = read_u32(is);
        Record rec;
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = read_u32(is);
            rec.shape.push_back(static_cast<int>(d));
            count *= d;
        }
        rec.data.resize(count);
        is.read(reinterpret_cast<char*>(rec.data.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (is.gcount() != static_cast<std::streamsize>(count * sizeof(float))) {
            throw CheckpointTruncatedError("checkpoint ends mid-data for '" + name + "'");
        }
        records[name] = std::move(rec);
    }

    // Hidden widths come from the stored shapes; everything else must match
    // the architecture those widths imply.
    auto find = [&](const std::string& name) -> const Record& {
        auto it = records.find(name);
        if (it == records.end()) {
            throw CheckpointShapeError("checkpoint missing parameter '" + name + "'");
        }
        return it->second;
    };
    const Record& dn_probe = find("dn0.layer1.weight");
    const Record& tm_probe = find("tm0.base1.weight");
    if (dn_probe.shape.size() != 2 || tm_probe.shape.size() != 2) {
        throw CheckpointShapeError("width probe parameters have unexpected rank");
    }
    const int dn_hidden = dn_probe.shape[0];
    const int tm_hidden = tm_probe.shape[0];

    ModelBundle bundle =
        init_weights(0, static_cast<Ordering>(ordering_byte), dn_hidden, tm_hidden);

    std::size_t used = 0;
    for (auto& [name, t] : bundle.named_params()) {
        const Record& rec = find(name);
        if (rec.shape != t.shape()) {
            throw CheckpointShapeError("parameter '" + name + "' has mismatched shape");
        }
        std::memcpy(t.data(), rec.data.data(), rec.data.size() * sizeof(float));
        ++used;
    }
    if (used != records.size()) {
        throw CheckpointShapeError("checkpoint contains unknown parameters");
    }
    return bundle;
}

}  // namespace hdrpyr
