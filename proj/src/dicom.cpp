#include "mammo/dicom.hpp"

#include <array>
#include <cstdio>
#include <cstring>

namespace mammo {
namespace dicom {

namespace {

using Kind = DicomError::Kind;

// VRs whose value length is a 32-bit field after two reserved bytes.
constexpr std::array<const char*, 10> kLongVrs = {"OB", "OD", "OF", "OL", "OW",
                                                  "SQ", "UC", "UN", "UR", "UT"};
constexpr std::array<const char*, 21> kShortVrs = {"AE", "AS", "AT", "CS", "DA", "DS", "DT",
                                                   "FL", "FD", "IS", "LO", "LT", "PN", "SH",
                                                   "SL", "SS", "ST", "TM", "UI", "UL", "US"};

bool vr_in(const char vr[2], std::span<const char* const> set) {
    for (const char* s : set)
        if (s[0] == vr[0] && s[1] == vr[1]) return true;
    return false;
}

constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;

// Cursor over the input; every read is bounds-checked so truncated or
// garbage input surfaces as a typed error, never as an out-of-range read.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

    std::uint8_t u8() {
        need(1, "byte");
        return bytes_[pos_++];
    }

    std::uint16_t u16() {
        need(2, "uint16");
        const std::uint16_t v =
            static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4, "uint32");
        const std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                                (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::vector<std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    void skip(std::size_t n, const char* what) {
        need(n, what);
        pos_ += n;
    }

    std::uint16_t peek_u16() const {
        if (remaining() < 2)
            throw DicomError(Kind::TruncatedElement, "input ends inside an element tag");
        return static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw DicomError(Kind::TruncatedElement,
                             std::string("input ends while reading ") + what + " at offset " +
                                 std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct Element {
    Tag tag;
    char vr[2] = {0, 0};
    std::uint32_t length = 0;  // kUndefinedLength for undefined
};

Element read_element_header(Reader& r) {
    Element e;
    e.tag.group = r.u16();
    e.tag.element = r.u16();
    e.vr[0] = static_cast<char>(r.u8());
    e.vr[1] = static_cast<char>(r.u8());
    if (vr_in(e.vr, kLongVrs)) {
        r.skip(2, "reserved VR bytes");
        e.length = r.u32();
    } else if (vr_in(e.vr, kShortVrs)) {
        e.length = r.u16();
    } else {
        throw DicomError(Kind::UnsupportedVR,
                         "unknown VR '" + std::string(e.vr, 2) + "' for tag " + e.tag.str());
    }
    return e;
}

std::uint16_t parse_us(const std::vector<std::uint8_t>& value, const Tag& tag) {
    if (value.size() != 2)
        throw DicomError(Kind::UnsupportedValue,
                         "tag " + tag.str() + " expected a 2-byte US value");
    return static_cast<std::uint16_t>(value[0] | (value[1] << 8));
}

std::string parse_string(const std::vector<std::uint8_t>& value) {
    return trim_padding(std::string(value.begin(), value.end()));
}

} // namespace

std::string Tag::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "(%04X,%04X)", group, element);
    return buf;
}

std::string trim_padding(std::string value) {
    while (!value.empty() && (value.back() == ' ' || value.back() == '\0')) value.pop_back();
    return value;
}

bool is_jpeg2000(const std::string& transfer_syntax_uid) {
    return transfer_syntax_uid == kJpeg2000Lossless || transfer_syntax_uid == kJpeg2000;
}

DicomObject parse_dicom(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 132 || std::memcmp(bytes.data() + 128, "DICM", 4) != 0)
        throw DicomError(Kind::MissingMagic, "not a DICOM part-10 file");

    Reader r(bytes.subspan(132));
    DicomObject obj;
    bool have_pixel_data = false;
    bool have_photometric = false;
    std::map<Tag, bool> seen;

    // File meta group (0002,xxxx) is always explicit VR little endian; the
    // dataset follows in the transfer syntax the meta group declares. Both
    // are parsed by the same element loop since only explicit VR LE datasets
    // are supported.
    bool checked_syntax = false;
    while (!r.at_end()) {
        if (!checked_syntax && !obj.transfer_syntax_uid.empty() && r.peek_u16() != 0x0002) {
            // Leaving the meta group: reject syntaxes we cannot parse.
            if (obj.transfer_syntax_uid == kImplicitVrLittleEndian)
                throw DicomError(Kind::UnsupportedTransferSyntax,
                                 "implicit VR little endian is rejected, not guessed");
            if (obj.transfer_syntax_uid != kExplicitVrLittleEndian &&
                !is_jpeg2000(obj.transfer_syntax_uid))
                throw DicomError(Kind::UnsupportedTransferSyntax,
                                 "unsupported transfer syntax '" + obj.transfer_syntax_uid +
                                     "'");
            checked_syntax = true;
        }

        Element e = read_element_header(r);

        if (e.tag == kPixelData) {
            if (e.length == kUndefinedLength) {
                if (!is_jpeg2000(obj.transfer_syntax_uid))
                    throw DicomError(Kind::MalformedEncapsulation,
                                     "undefined-length pixel data in a native syntax");
                // Capture the raw item stream for later fragment extraction.
                const std::size_t start = r.pos();
                for (;;) {
                    const std::uint16_t group = r.u16();
                    const std::uint16_t element = r.u16();
                    if (group != 0xFFFE)
                        throw DicomError(Kind::MalformedEncapsulation,
                                         "expected an item tag in encapsulated pixel data, "
                                         "got " +
                                             Tag{group, element}.str());
                    const std::uint32_t len = r.u32();
                    if (element == 0xE0DD) {
                        if (len != 0)
                            throw DicomError(Kind::MalformedEncapsulation,
                                             "sequence delimiter with nonzero length");
                        break;
                    }
                    if (element != 0xE000)
                        throw DicomError(Kind::MalformedEncapsulation,
                                         "unexpected tag " + Tag{group, element}.str() +
                                             " in encapsulated pixel data");
                    if (len == kUndefinedLength)
                        throw DicomError(Kind::MalformedEncapsulation,
                                         "fragment with undefined length");
                    r.skip(len, "pixel fragment");
                }
                const std::size_t end = r.pos();
                obj.pixel_payload.assign(
                    bytes.begin() + static_cast<std::ptrdiff_t>(132 + start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(132 + end));
                obj.payload_kind = PayloadKind::Encapsulated;
            } else {
                if (is_jpeg2000(obj.transfer_syntax_uid))
                    throw DicomError(Kind::MalformedEncapsulation,
                                     "JPEG2000 pixel data must be encapsulated "
                                     "(undefined length)");
                obj.pixel_payload = r.take(e.length, "native pixel data");
                obj.payload_kind = PayloadKind::Native;
            }
            have_pixel_data = true;
            continue;
        }

        if (e.length == kUndefinedLength)
            throw DicomError(Kind::UnsupportedValue,
                             "undefined-length element " + e.tag.str() +
                                 " outside pixel data is not supported");

        std::vector<std::uint8_t> value = r.take(e.length, "element value");
        if (seen[e.tag])
            throw DicomError(Kind::UnsupportedValue, "duplicate tag " + e.tag.str());
        seen[e.tag] = true;

        if (e.tag == kTransferSyntaxUid) {
            obj.transfer_syntax_uid = parse_string(value);
        } else if (e.tag == kPhotometricInterpretation) {
            const std::string photometric = parse_string(value);
            if (photometric == "MONOCHROME1")
                obj.photometric_interpretation = Photometric::Monochrome1;
            else if (photometric == "MONOCHROME2")
                obj.photometric_interpretation = Photometric::Monochrome2;
            else
                throw DicomError(Kind::UnsupportedValue,
                                 "photometric interpretation '" + photometric + "'");
            have_photometric = true;
        } else if (e.tag == kRows) {
            obj.rows = parse_us(value, e.tag);
        } else if (e.tag == kColumns) {
            obj.columns = parse_us(value, e.tag);
        } else if (e.tag == kBitsAllocated) {
            obj.bits_allocated = parse_us(value, e.tag);
        } else if (e.tag == kBitsStored) {
            obj.bits_stored = parse_us(value, e.tag);
        }
        obj.extra_tags.emplace(e.tag, std::move(value));
    }

    const auto require = [&](const Tag& tag, bool present, const char* name) {
        if (!present)
            throw DicomError(Kind::MissingRequiredTag,
                             std::string(name) + " " + tag.str() + " not found");
    };
    require(kTransferSyntaxUid, !obj.transfer_syntax_uid.empty(), "TransferSyntaxUID");
    require(kPhotometricInterpretation, have_photometric, "PhotometricInterpretation");
    require(kRows, seen.count(kRows) > 0, "Rows");
    require(kColumns, seen.count(kColumns) > 0, "Columns");
    require(kBitsAllocated, seen.count(kBitsAllocated) > 0, "BitsAllocated");
    require(kBitsStored, seen.count(kBitsStored) > 0, "BitsStored");
    require(kPixelData, have_pixel_data, "PixelData");

    if (obj.rows == 0 || obj.columns == 0)
        throw DicomError(Kind::UnsupportedValue, "Rows and Columns must be positive");
    if (obj.bits_allocated != 8 && obj.bits_allocated != 16)
        throw DicomError(Kind::UnsupportedValue,
                         "BitsAllocated must be 8 or 16, got " +
                             std::to_string(obj.bits_allocated));
    if (obj.bits_stored < 1 || obj.bits_stored > obj.bits_allocated)
        throw DicomError(Kind::UnsupportedValue,
                         "BitsStored " + std::to_string(obj.bits_stored) +
                             " exceeds BitsAllocated " + std::to_string(obj.bits_allocated));
    if (obj.payload_kind == PayloadKind::Native) {
        const std::size_t expected =
            obj.rows * obj.columns * static_cast<std::size_t>(obj.bits_allocated / 8);
        if (obj.pixel_payload.size() != expected)
            throw DicomError(Kind::PayloadSizeMismatch,
                             "native payload is " + std::to_string(obj.pixel_payload.size()) +
                                 " bytes, expected " + std::to_string(expected));
    }
    return obj;
}

std::vector<std::uint8_t> extract_pixel_payload(const DicomObject& obj) {
    if (obj.payload_kind == PayloadKind::Native) return obj.pixel_payload;

    Reader r(obj.pixel_payload);
    std::vector<std::uint8_t> fragments;
    bool first = true;
    while (!r.at_end()) {
        const std::uint16_t group = r.u16();
        const std::uint16_t element = r.u16();
        if (group != 0xFFFE)
            throw DicomError(Kind::MalformedEncapsulation,
                             "expected an item tag, got " + Tag{group, element}.str());
        const std::uint32_t len = r.u32();
        if (element == 0xE0DD) break;
        if (element != 0xE000)
            throw DicomError(Kind::MalformedEncapsulation,
                             "unexpected tag " + Tag{group, element}.str());
        std::vector<std::uint8_t> item = r.take(len, "fragment");
        if (first) {
            first = false;  // basic offset table, skipped
            continue;
        }
        fragments.insert(fragments.end(), item.begin(), item.end());
    }
    return fragments;
}

PixelMatrix decode_native_pixels(const DicomObject& obj) {
    const std::size_t n = obj.rows * obj.columns;
    const std::size_t bytes_per = static_cast<std::size_t>(obj.bits_allocated / 8);
    if (obj.pixel_payload.size() != n * bytes_per)
        throw DicomError(Kind::PayloadSizeMismatch,
                         "payload is " + std::to_string(obj.pixel_payload.size()) +
                             " bytes, expected " + std::to_string(n * bytes_per));
    PixelMatrix m;
    m.rows = obj.rows;
    m.columns = obj.columns;
    m.bits_stored = obj.bits_stored;
    m.values.resize(n);
    const std::uint16_t mask =
        obj.bits_stored == 16 ? 0xFFFF
                              : static_cast<std::uint16_t>((1u << obj.bits_stored) - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t v;
        if (bytes_per == 2)
            v = static_cast<std::uint16_t>(obj.pixel_payload[2 * i] |
                                           (obj.pixel_payload[2 * i + 1] << 8));
        else
            v = obj.pixel_payload[i];
        m.values[i] = static_cast<std::uint16_t>(v & mask);
    }
    return m;
}

} // namespace dicom
} // namespace mammo
