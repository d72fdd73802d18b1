#include <string>
#include <string_view>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "avatar_sync/narrative.hpp"

namespace avatar_sync {

std::string normalize_answer(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFD normalizer unavailable");

    icu::UnicodeString decomposed =
        nfd->normalize(icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size()))),
                       status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");

    icu::UnicodeString folded;
    bool pending_space = false;
    for (int32_t i = 0; i < decomposed.length();) {
        UChar32 c = decomposed.char32At(i);
        i += U16_LENGTH(c);
        if (u_charType(c) == U_NON_SPACING_MARK) continue;
        if (u_isUWhiteSpace(c)) {
            pending_space = !folded.isEmpty();
            continue;
        }
        if (pending_space) {
            folded.append(static_cast<UChar32>(' '));
            pending_space = false;
        }
        folded.append(c);
    }
    folded.toLower(icu::Locale::getRoot());

    std::string out;
    folded.toUTF8String(out);
    return out;
}

}  // namespace avatar_sync
