#include "synth.hpp"

#include "esprep/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace synth {

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::string utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

namespace {

const std::vector<std::string> kOnsets = {"",   "b",  "c",  "d",  "f",  "g",  "l",  "m",  "n",  "p",  "r", "s",
                                          "t",  "v",  "ch", "ll", "br", "tr", "pl", "gr", "cr", "j",  "z", "ñ"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "a", "e", "o", "á", "é", "í", "ó", "ú", "ue", "ie"};
const std::vector<std::string> kCodas = {"", "", "", "n", "s", "r", "l"};

std::string capitalize(const std::string& w) {
    if (w.empty()) return w;
    const unsigned char c = static_cast<unsigned char>(w[0]);
    if (c >= 'a' && c <= 'z') return static_cast<char>(c - 32) + w.substr(1);
    if (w.rfind("ñ", 0) == 0) return "Ñ" + w.substr(2);
    return w;
}

}  // namespace

Lexicon::Lexicon(std::size_t size, std::uint64_t seed, double exponent) {
    Rng rng(seed);
    std::set<std::string> seen;
    while (words_.size() < size) {
        std::string w;
        const std::size_t syllables = 1 + uniform(rng, 0, 3);
        for (std::size_t s = 0; s < syllables; ++s) {
            w += kOnsets[uniform(rng, 0, kOnsets.size() - 1)];
            w += kVowels[uniform(rng, 0, kVowels.size() - 1)];
            if (s + 1 == syllables || uniform(rng, 0, 3) == 0) w += kCodas[uniform(rng, 0, kCodas.size() - 1)];
        }
        if (seen.insert(w).second) words_.push_back(w);
    }
    double total = 0.0;
    for (std::size_t r = 0; r < size; ++r) {
        total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
        cdf_.push_back(total);
    }
    for (double& c : cdf_) c /= total;
}

const std::string& Lexicon::word(Rng& rng) const {
    const double u = uniform01(rng);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return words_[std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), words_.size() - 1)];
}

std::string Lexicon::sentence(Rng& rng, std::size_t min_words, std::size_t max_words) const {
    const std::size_t n = uniform(rng, min_words, max_words);
    const bool question = uniform(rng, 0, 9) == 0;
    std::string s = question ? "¿" : "";
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) s += ' ';
        s += i == 0 ? capitalize(word(rng)) : word(rng);
        if (i + 1 < n && uniform(rng, 0, 11) == 0) s += ',';
    }
    s += question ? "?" : ".";
    return s;
}

std::string Lexicon::document(Rng& rng, std::size_t min_sentences, std::size_t max_sentences) const {
    const std::size_t n = uniform(rng, min_sentences, max_sentences);
    std::string d;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) d += ' ';
        d += sentence(rng);
    }
    return d;
}

const std::map<std::string, std::vector<std::string>>& language_words() {
    static const std::map<std::string, std::vector<std::string>> words = {
        {"es",
         {"el", "la", "de", "que", "y", "en", "un", "una", "los", "las", "por", "con", "para", "como", "más",
          "pero", "sus", "le", "ya", "este", "porque", "esta", "entre", "cuando", "muy", "sin", "sobre",
          "también", "hasta", "hay", "donde", "quien", "desde", "todo", "nos", "durante", "todos", "contra",
          "otros", "ese", "eso", "ante", "ellos", "esto", "antes", "algunos", "qué", "unos", "yo", "otro",
          "otras", "otra", "él", "tanto", "esa", "estos", "mucho", "quienes", "nada", "muchos", "cual", "poco",
          "ella", "estar", "estas", "algunas", "algo", "nosotros", "casa", "perro", "ciudad", "tiempo", "año",
          "día", "hombre", "mujer", "vida", "mundo", "país", "trabajo", "gobierno", "mañana", "noche", "agua",
          "pueblo", "calle", "niños", "hacer", "puede", "tiene", "hizo", "dijo", "según", "después", "llegar",
          "siempre", "nuestro", "señor", "historia", "pequeño", "grande", "mejor", "nuevo", "primera", "ahora",
          "aquí", "empresa", "escuela", "juego", "equipo", "hijo", "madre", "padre", "ejemplo", "verdad"}},
        {"en",
         {"the", "of", "and", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on", "are", "as",
          "with", "his", "they", "at", "be", "this", "have", "from", "or", "one", "had", "by", "word", "but",
          "not", "what", "all", "were", "we", "when", "your", "can", "said", "there", "use", "each", "which",
          "she", "do", "how", "their", "if", "will", "up", "other", "about", "out", "many", "then", "them",
          "these", "so", "some", "her", "would", "make", "like", "him", "into", "time", "has", "look", "two",
          "more", "write", "go", "see", "number", "way", "could", "people", "my", "than", "first", "water",
          "been", "call", "who", "oil", "its", "now", "find", "long", "down", "day", "did", "get", "come",
          "made", "may", "part", "house", "world", "school", "government", "children", "should", "through",
          "because", "while", "where", "right", "still", "every", "thought", "without", "something", "night"}},
        {"pt",
         {"o", "a", "de", "que", "e", "do", "da", "em", "um", "para", "é", "com", "não", "uma", "os", "no",
          "se", "na", "por", "mais", "as", "dos", "como", "mas", "foi", "ao", "ele", "das", "tem", "à", "seu",
          "sua", "ou", "ser", "quando", "muito", "há", "nos", "já", "está", "eu", "também", "só", "pelo", "pela",
          "até", "isso", "ela", "entre", "era", "depois", "sem", "mesmo", "aos", "ter", "seus", "quem", "nas",
          "me", "esse", "eles", "estão", "você", "tinha", "foram", "essa", "num", "nem", "suas", "meu", "às",
          "minha", "têm", "numa", "pelos", "elas", "havia", "seja", "qual", "será", "nós", "tenho", "lhe",
          "deles", "essas", "esses", "pelas", "este", "fosse", "dele", "cidade", "trabalho", "governo", "coisa",
          "então", "ainda", "agora", "sempre", "nosso", "tempo", "dia", "homem", "mulher", "vida", "mundo",
          "país", "escola", "criança", "amanhã", "noite", "água", "rua", "fazer", "pode", "disse", "português"}},
        {"fr",
         {"le", "de", "un", "être", "et", "à", "il", "avoir", "ne", "je", "son", "que", "se", "qui", "ce",
          "dans", "en", "du", "elle", "au", "pour", "pas", "vous", "par", "sur", "faire", "plus", "dire", "me",
          "on", "mon", "lui", "nous", "comme", "mais", "pouvoir", "avec", "tout", "aller", "voir", "bien", "où",
          "sans", "tu", "ou", "leur", "homme", "si", "deux", "mari", "moi", "vouloir", "te", "femme", "venir",
          "quand", "grand", "celui", "notre", "devoir", "là", "jour", "prendre", "même", "votre", "rien",
          "petit", "encore", "aussi", "quelque", "dont", "tout", "mer", "trouver", "donner", "temps", "ça",
          "peu", "enfant", "falloir", "très", "monde", "chose", "maison", "eau", "ville", "travail", "gens",
          "toujours", "maintenant", "après", "avant", "beaucoup", "école", "nuit", "demain", "rue", "pays",
          "pourquoi", "parce", "cette", "ces", "sont", "était", "avait", "fait", "peut", "leurs", "aujourd'hui"}},
        {"de",
         {"der", "die", "und", "in", "den", "von", "zu", "das", "mit", "sich", "des", "auf", "für", "ist", "im",
          "dem", "nicht", "ein", "eine", "als", "auch", "es", "an", "werden", "aus", "er", "hat", "dass", "sie",
          "nach", "wird", "bei", "einer", "um", "am", "sind", "noch", "wie", "einem", "über", "einen", "so",
          "zum", "war", "haben", "nur", "oder", "aber", "vor", "zur", "bis", "mehr", "durch", "man", "sein",
          "wurde", "sei", "prozent", "hatte", "kann", "gegen", "vom", "können", "schon", "wenn", "habe",
          "seine", "ihre", "dann", "unter", "wir", "soll", "ich", "eines", "jahr", "zwei", "jahren", "diese",
          "dieser", "wieder", "keine", "seiner", "worden", "will", "zwischen", "immer", "was", "sagte", "gibt",
          "alle", "diesem", "seit", "muss", "doch", "jetzt", "haus", "stadt", "arbeit", "regierung", "kinder",
          "wasser", "straße", "schule", "nacht", "morgen", "welt", "leben", "frau", "mann", "zeit", "heute"}},
    };
    return words;
}

std::string language_sentence(const std::string& lang, Rng& rng, std::size_t min_chars) {
    const auto& words = language_words().at(lang);
    std::string s;
    while (s.size() < min_chars || uniform(rng, 0, 2) != 0) {
        if (!s.empty()) s += ' ';
        s += words[uniform(rng, 0, words.size() - 1)];
        if (s.size() > min_chars * 3) break;
    }
    return capitalize(s) + ".";
}

std::vector<esprep::Document> corpus(const Lexicon& lex, std::size_t count, Rng& rng, esprep::DocId first_id) {
    std::vector<esprep::Document> docs;
    docs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        esprep::Document d;
        d.id = first_id + i;
        d.source = "synthetic";
        d.text = lex.document(rng);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<esprep::Document> corpus_of_size(const Lexicon& lex, std::size_t total_bytes, Rng& rng) {
    std::vector<esprep::Document> docs;
    std::size_t bytes = 0;
    while (bytes < total_bytes) {
        esprep::Document d;
        d.id = docs.size();
        d.source = "synthetic";
        d.text = lex.document(rng);
        bytes += d.text.size();
        docs.push_back(std::move(d));
    }
    return docs;
}

namespace {

// Windows-1252 0x80-0x9F; 0 marks the five undefined slots.
constexpr char32_t kCp1252High[32] = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178,
};

}  // namespace

bool cp1252_encodable(const std::string& s) {
    for (unsigned char b : s) {
        if (b >= 0x80 && b < 0xA0 && kCp1252High[b - 0x80] == 0) return false;
    }
    return true;
}

std::string mojibake(const std::string& s) {
    std::string out;
    for (unsigned char b : s) {
        if (b < 0x80) {
            out += static_cast<char>(b);
        } else if (b < 0xA0) {
            const char32_t cp = kCp1252High[b - 0x80];
            out += utf8(cp ? cp : b);
        } else {
            out += utf8(b);
        }
    }
    return out;
}

bool reads_as_mojibake(const std::string& s) {
    std::vector<int> bytes;
    for (char32_t cp : esprep::unicode::decode(s)) {
        int b = -1;
        if (cp < 0x80 || (cp >= 0xA0 && cp <= 0xFF)) b = static_cast<int>(cp);
        if (cp >= 0x80 && cp < 0xA0 && kCp1252High[cp - 0x80] == 0) b = static_cast<int>(cp);
        for (int i = 0; i < 32; ++i) {
            if (kCp1252High[i] != 0 && kCp1252High[i] == cp) b = 0x80 + i;
        }
        bytes.push_back(b);
    }
    const auto cont = [&](std::size_t i, int lo, int hi) { return i < bytes.size() && bytes[i] >= lo && bytes[i] <= hi; };
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const int b = bytes[i];
        if (b >= 0xC2 && b <= 0xDF && cont(i + 1, 0x80, 0xBF)) return true;
        if (b >= 0xE0 && b <= 0xEF) {
            const int lo = b == 0xE0 ? 0xA0 : 0x80, hi = b == 0xED ? 0x9F : 0xBF;
            if (cont(i + 1, lo, hi) && cont(i + 2, 0x80, 0xBF)) return true;
        }
        if (b >= 0xF0 && b <= 0xF4) {
            const int lo = b == 0xF0 ? 0x90 : 0x80, hi = b == 0xF4 ? 0x8F : 0xBF;
            if (cont(i + 1, lo, hi) && cont(i + 2, 0x80, 0xBF) && cont(i + 3, 0x80, 0xBF)) return true;
        }
    }
    return false;
}

std::string random_text(Rng& rng, std::size_t max_chars) {
    static const std::vector<char32_t> specials = {
        0x00E1, 0x00E9, 0x00ED, 0x00F3, 0x00FA, 0x00F1, 0x00D1, 0x00BF, 0x00A1, 0x00FC, 0x00E7, 0x00C3,
        0x00C2, 0x00A9, 0x00AE, 0x00B0, 0x00BD, 0x2019, 0x201C, 0x201D, 0x2013, 0x2014, 0x20AC, 0x2026,
        0xFB01, 0xFF11, 0xFF21, 0x2460, 0x00B2, 0x0301, 0x0303, 0x0308, 0x0000 + 0x07, 0x0085, 0x009D,
        0x00A0, 0x3000, 0x1F600, 0x4E2D, 0x0416, 0x03A9, 0x0009, 0x000A, 0x000D, 0x200B, 0x00AD};
    const std::size_t n = uniform(rng, 0, max_chars);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = uniform(rng, 0, 9);
        if (k < 5) {
            s += static_cast<char>(uniform(rng, 0x20, 0x7E));
        } else if (k < 8) {
            s += utf8(specials[uniform(rng, 0, specials.size() - 1)]);
        } else if (k < 9) {
            s += utf8(static_cast<char32_t>(uniform(rng, 0xA0, 0xFF)));
        } else {
            // A fragment that already looks like mojibake.
            std::string clean = utf8(specials[uniform(rng, 0, 23)]);
            s += mojibake(clean);
        }
    }
    return s;
}

}  // namespace synth
