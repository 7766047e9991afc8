#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sstream>

#include "facetrack/cascade.hpp"

namespace facetrack {

namespace {

namespace pt = boost::property_tree;

// OpenCV subtracts this from every stage threshold at load time; window
// verdicts only match the reference detector if we do the same.
constexpr float kStageThresholdEps = 1e-5f;

[[noreturn]] void fail(const std::string& msg, const std::string& path) {
    throw ParseError(msg + " at " + path, 0, path);
}

const pt::ptree& child(const pt::ptree& node, const char* name, const std::string& path) {
    auto it = node.find(name);
    if (it == node.not_found()) fail(std::string("missing element <") + name + ">", path);
    return it->second;
}

std::vector<long long> int_list(const pt::ptree& node, const std::string& path) {
    std::istringstream in(node.get_value<std::string>());
    std::vector<long long> out;
    long long v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) fail("non-integer content", path);
    return out;
}

std::vector<double> real_list(const pt::ptree& node, const std::string& path) {
    std::istringstream in(node.get_value<std::string>());
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) fail("non-numeric content", path);
    return out;
}

} // namespace

CascadeModel parse_standard_xml(const std::string& text) {
    pt::ptree doc;
    try {
        std::istringstream in(text);
        pt::read_xml(in, doc, pt::xml_parser::trim_whitespace | pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("XML syntax error: ") + e.message(), 0, "opencv_storage");
    }

    const pt::ptree& storage = child(doc, "opencv_storage", "/");

    // the cascade node is whichever child carries a featureType
    const pt::ptree* cascade = nullptr;
    std::string croot;
    for (const auto& [name, node] : storage) {
        if (name != "<xmlattr>" && node.find("featureType") != node.not_found()) {
            cascade = &node;
            croot = "opencv_storage." + name;
            break;
        }
    }
    if (!cascade) fail("no cascade element with a featureType", "opencv_storage");

    const std::string feature_type = child(*cascade, "featureType", croot).get_value<std::string>();
    if (feature_type != "LBP")
        throw UnsupportedFeatureError("unsupported featureType '" + feature_type +
                                      "' (only LBP cascades are handled)");
    const std::string stage_type = child(*cascade, "stageType", croot).get_value<std::string>();
    if (stage_type != "BOOST") fail("unsupported stageType '" + stage_type + "'", croot);

    CascadeModel model;
    model.base_width = child(*cascade, "width", croot).get_value<int>(0);
    model.base_height = child(*cascade, "height", croot).get_value<int>(0);
    if (model.base_width < 1 || model.base_height < 1)
        fail("invalid base window size", croot);

    // features first, so stage weak classifiers can be resolved by index
    std::vector<MBLBPFeature> features;
    {
        const pt::ptree& fnode = child(*cascade, "features", croot);
        int idx = 0;
        for (const auto& [name, node] : fnode) {
            if (name != "_") continue;
            const std::string fpath = croot + ".features._[" + std::to_string(idx) + "]";
            const auto rect = int_list(child(node, "rect", fpath), fpath + ".rect");
            if (rect.size() != 4) fail("rect must hold 4 integers", fpath + ".rect");
            MBLBPFeature f;
            f.x = static_cast<int>(rect[0]);
            f.y = static_cast<int>(rect[1]);
            f.block_w = static_cast<int>(rect[2]);
            f.block_h = static_cast<int>(rect[3]);
            if (f.x < 0 || f.y < 0 || f.block_w < 1 || f.block_h < 1 ||
                f.x + 3 * f.block_w > model.base_width ||
                f.y + 3 * f.block_h > model.base_height)
                fail("feature rect exceeds base window", fpath + ".rect");
            features.push_back(f);
            ++idx;
        }
        if (features.empty()) fail("no features", croot + ".features");
    }

    const pt::ptree& stages = child(*cascade, "stages", croot);
    int sidx = 0;
    for (const auto& [name, snode] : stages) {
        if (name != "_") continue;
        const std::string spath = croot + ".stages._[" + std::to_string(sidx) + "]";
        Stage stage;
        stage.threshold =
            child(snode, "stageThreshold", spath).get_value<float>() - kStageThresholdEps;

        const pt::ptree& weaks = child(snode, "weakClassifiers", spath);
        int widx = 0;
        for (const auto& [wname, wnode] : weaks) {
            if (wname != "_") continue;
            const std::string wpath = spath + ".weakClassifiers._[" + std::to_string(widx) + "]";
            const auto internal = int_list(child(wnode, "internalNodes", wpath),
                                           wpath + ".internalNodes");
            const auto leaves = real_list(child(wnode, "leafValues", wpath),
                                          wpath + ".leafValues");
            // stump: left child, right child, feature index, 8 LUT words
            if (internal.size() != 11)
                fail("internalNodes must hold 11 integers (stump with 256-way split)",
                     wpath + ".internalNodes");
            if (leaves.size() != 2) fail("leafValues must hold 2 reals", wpath + ".leafValues");

            const long long fidx = internal[2];
            if (fidx < 0 || fidx >= static_cast<long long>(features.size()))
                fail("feature index " + std::to_string(fidx) + " out of range",
                     wpath + ".internalNodes");

            WeakClassifier wc;
            wc.feature = features[static_cast<std::size_t>(fidx)];
            for (int k = 0; k < 8; ++k)
                wc.lut[k] = static_cast<std::uint32_t>(internal[3 + k]);
            wc.left_val = static_cast<float>(leaves[0]);
            wc.right_val = static_cast<float>(leaves[1]);
            stage.weak.push_back(wc);
            ++widx;
        }
        if (stage.weak.empty()) fail("stage has no weak classifiers", spath);
        model.stages.push_back(std::move(stage));
        ++sidx;
    }
    if (model.stages.empty()) fail("no stages", croot + ".stages");
    return model;
}

} // namespace facetrack
