#pragma once

#include "plancurate/errors.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace plancurate {

using NodeId = std::string;

enum class NodeStatus { unexplored, exploring, completed };
enum class Decomposition { none, standard, fork };

std::string_view to_string(NodeStatus s);
std::string_view to_string(Decomposition d);
NodeStatus parse_node_status(std::string_view text);
Decomposition parse_decomposition(std::string_view text);

struct TaskNode {
    NodeId id;
    std::string title;
    std::string description;
    std::string estimated_duration;
    NodeStatus status = NodeStatus::unexplored;
    Decomposition decomposition = Decomposition::none;
    std::optional<std::string> draft_ref;
    std::vector<NodeId> children;
    std::optional<NodeId> parent;
    int level = 0;

    friend bool operator==(const TaskNode&, const TaskNode&) = default;
};

/// Input record for attaching children.
struct SubtaskSpec {
    std::string title;
    std::string description;
    std::string estimated_duration;

    friend bool operator==(const SubtaskSpec&, const SubtaskSpec&) = default;
};

/// The hierarchical plan. The goal is the single root at level 0; nodes are
/// only ever added, never removed or reordered.
class TaskTree {
public:
    static constexpr int kMaxLevel = 6;
    static constexpr std::size_t kMaxFanout = 12;

    TaskTree() = default;

    static TaskTree create(std::string_view goal_title, std::string_view goal_description,
                           std::string created_at = {});

    /// Attaches children with engine-generated ids ("n<k>", k = node count + 1).
    std::vector<NodeId> attach_subtasks(const NodeId& parent, std::span<const SubtaskSpec> subtasks,
                                        Decomposition kind);

    /// Same as attach_subtasks but with caller-supplied ids; used on replay.
    void attach_subtasks_with_ids(const NodeId& parent, std::span<const NodeId> ids,
                                  std::span<const SubtaskSpec> subtasks, Decomposition kind);

    /// Marks `node` completed with the given draft; completion rolls up to
    /// ancestors whose children are all completed.
    void set_draft_ref(const NodeId& node, std::string draft_key);

    /// unexplored -> exploring. Completed is sticky.
    void mark_exploring(const NodeId& node);

    [[nodiscard]] std::string outline() const;
    [[nodiscard]] std::vector<NodeId> node_path(const NodeId& node) const;

    [[nodiscard]] const TaskNode& node(const NodeId& id) const;
    [[nodiscard]] bool contains(const NodeId& id) const { return index_.contains(id); }
    [[nodiscard]] const NodeId& root() const { return root_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    /// Nodes in creation order.
    [[nodiscard]] const std::vector<TaskNode>& nodes() const { return nodes_; }
    [[nodiscard]] const std::string& created_at() const { return created_at_; }

    /// Checks every structural invariant; throws corrupt_session with the
    /// first violation found.
    void validate() const;

    [[nodiscard]] Json to_json() const;
    static TaskTree from_json(const Json& j);

    friend bool operator==(const TaskTree&, const TaskTree&) = default;

private:
    TaskNode& mutable_node(const NodeId& id);
    void check_attach(const TaskNode& parent, std::size_t count) const;

    NodeId root_;
    std::vector<TaskNode> nodes_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::string created_at_;
};

}  // namespace plancurate
