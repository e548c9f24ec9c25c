// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace rid {

/// Minimal SHA-1, used for git-style content hashes of config snapshots.
inline std::string sha1_hex(const void* data, size_t len) {
    uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    std::vector<unsigned char> msg(static_cast<const unsigned char*>(data),
                                   static_cast<const unsigned char*>(data) + len);
    const uint64_t bit_len = static_cast<uint64_t>(len) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0);
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<unsigned char>((bit_len >> (8 * i)) & 0xff));

    auto rotl = [](uint32_t x, int n) { return (x << n) | (x >> (32 - n)); };
    for (size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (static_cast<uint32_t>(msg[chunk + 4 * static_cast<size_t>(i)]) << 24) |
                   (static_cast<uint32_t>(msg[chunk + 4 * static_cast<size_t>(i) + 1]) << 16) |
                   (static_cast<uint32_t>(msg[chunk + 4 * static_cast<size_t>(i) + 2]) << 8) |
                   static_cast<uint32_t>(msg[chunk + 4 * static_cast<size_t>(i) + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rotl(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    for (uint32_t v : h)
        for (int i = 7; i >= 0; --i) out.push_back(hex[(v >> (4 * i)) & 0xf]);
    return out;
}

/// Hash of a string the way git hashes a blob: sha1("blob <len>\0" + content).
inline std::string git_blob_sha1(const std::string& content) {
    std::string buf = "blob " + std::to_string(content.size());
    buf.push_back('\0');
    buf += content;
    return sha1_hex(buf.data(), buf.size());
}

}  // namespace rid
