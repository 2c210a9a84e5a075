import math

import numpy as np
import pytest

from comgrasp.errors import InvalidInput
from comgrasp.kinematics import (
    JointSpec,
    KinematicChain,
    forward_kinematics,
    geometric_jacobian,
    inverse_kinematics,
    lever_arms,
    link_com_positions,
    potential_energy,
    self_gravity_torques,
)
from comgrasp.transforms import Transform, axis_angle

from helpers import central_difference, dh_forward, random_chain, random_transform, ur5_dh_chain

Z = np.array([0.0, 0.0, 1.0])


def planar_two_link(l1=0.5, l2=0.3, m1=1.0, m2=2.0):
    j1 = JointSpec(Transform(), Z, m1, np.array([l1 / 2, 0, 0]))
    j2 = JointSpec(Transform(None, np.array([l1, 0, 0])), Z, m2, np.array([l2 / 2, 0, 0]))
    return KinematicChain([j1, j2], Transform(None, np.array([l2, 0, 0])))


def test_planar_two_link_matches_hand_formula():
    chain = planar_two_link()
    q = [0.4, -1.1]
    ee = forward_kinematics(chain, q).eelink_frame
    x = 0.5 * math.cos(0.4) + 0.3 * math.cos(0.4 - 1.1)
    y = 0.5 * math.sin(0.4) + 0.3 * math.sin(0.4 - 1.1)
    np.testing.assert_allclose(ee.t, [x, y, 0.0], atol=1e-14)


def test_scene_arm_matches_textbook_dh(scene):
    """The shipped arm is the DH product followed by the gripper offset."""
    d, a, alpha = ur5_dh_chain()
    rng = np.random.default_rng(3)
    for _ in range(20):
        q = rng.uniform(-math.pi, math.pi, 6)
        T = dh_forward(q, d, a, alpha, tool_z=0.15)
        np.testing.assert_allclose(forward_kinematics(scene.chain, q).eelink_frame.matrix(), T, atol=1e-12)


def test_self_gravity_is_minus_potential_gradient(rng):
    for _ in range(20):
        chain = random_chain(rng)
        q = rng.uniform(-3, 3, chain.n)
        fd = central_difference(lambda x: potential_energy(chain, x), q, h=1e-6)
        np.testing.assert_allclose(self_gravity_torques(chain, q), -fd, atol=1e-6)


def test_self_gravity_horizontal_lever():
    chain = KinematicChain([JointSpec(Transform(), np.array([0.0, 1.0, 0.0]), 2.0, np.array([0.4, 0, 0]))])
    # a positive turn about +y carries +x toward -z, so the weight drives +y
    np.testing.assert_allclose(self_gravity_torques(chain, [0.0]), [2.0 * 9.81 * 0.4], atol=1e-12)


def test_lever_arms_are_joint_to_eelink(rng):
    chain = random_chain(rng)
    q = rng.uniform(-3, 3, chain.n)
    fs = forward_kinematics(chain, q)
    arms = lever_arms(chain, q)
    for i, f in enumerate(fs.joint_frames):
        np.testing.assert_allclose(arms.r_ee[i], fs.eelink_frame.t - f.t, atol=1e-14)
        np.testing.assert_allclose(arms.axes[i], f.R @ chain.joints[i].axis, atol=1e-14)
    assert len(arms) == chain.n
    assert len(list(arms)) == chain.n


def test_link_coms_follow_frames(rng):
    chain = random_chain(rng)
    q = rng.uniform(-3, 3, chain.n)
    fs = forward_kinematics(chain, q)
    coms = link_com_positions(chain, q)
    for i, f in enumerate(fs.joint_frames):
        np.testing.assert_allclose(coms[i], f.R @ chain.joints[i].link_com + f.t, atol=1e-14)


def test_jacobian_matches_finite_differences(rng):
    chain = random_chain(rng)
    q = rng.uniform(-3, 3, chain.n)
    J = geometric_jacobian(chain, q)
    for i in range(chain.n):
        dq = np.zeros(chain.n)
        dq[i] = 1e-7
        p1 = forward_kinematics(chain, q + dq).eelink_frame
        p0 = forward_kinematics(chain, q - dq).eelink_frame
        np.testing.assert_allclose((p1.t - p0.t) / 2e-7, J[:3, i], atol=1e-6)
        W = (p1.R - p0.R) / 2e-7 @ forward_kinematics(chain, q).eelink_frame.R.T
        np.testing.assert_allclose([W[2, 1], W[0, 2], W[1, 0]], J[3:, i], atol=1e-6)


def test_inverse_kinematics_reaches_lift_pose(scene):
    from comgrasp.scene import GraspPose

    for yaw in np.linspace(-math.pi, math.pi, 9):
        g = GraspPose(0.45, 0.05, 0.01, yaw)
        target = g.eelink_frame(scene.lift_height)
        q = inverse_kinematics(scene.chain, target, scene.home)
        ee = forward_kinematics(scene.chain, q).eelink_frame
        np.testing.assert_allclose(ee.matrix(), target.matrix(), atol=1e-9)


def test_inverse_kinematics_reports_unreachable(scene):
    target = Transform(np.diag([1.0, -1.0, -1.0]), np.array([3.0, 0.0, 0.2]))
    with pytest.raises(InvalidInput):
        inverse_kinematics(scene.chain, target, scene.home, max_iter=50)


def test_joint_and_state_validation():
    with pytest.raises(InvalidInput):
        JointSpec(Transform(), np.array([0.0, 0.0, 2.0]))
    with pytest.raises(InvalidInput):
        JointSpec(Transform(), Z, -1.0)
    with pytest.raises(InvalidInput):
        KinematicChain([])
    with pytest.raises(InvalidInput):
        forward_kinematics(planar_two_link(), [0.0, 0.0, 0.0])


def test_subchain_keeps_tail_offset(rng):
    chain = random_chain(rng)
    tail = chain.subchain(3)
    head = chain.subchain(0, 3)
    assert tail.n == 3 and head.n == 3
    assert tail.eelink_offset is chain.eelink_offset
    np.testing.assert_array_equal(head.eelink_offset.matrix(), np.eye(4))


def test_forward_kinematics_composes_parent_then_joint_rotation(rng):
    chain = random_chain(rng, n=3)
    q = rng.uniform(-3, 3, 3)
    T = Transform()
    for j, qi in zip(chain.joints, q):
        T = T @ j.parent_transform @ Transform(axis_angle(j.axis, qi))
    expected = (T @ chain.eelink_offset).matrix()
    np.testing.assert_allclose(forward_kinematics(chain, q).eelink_frame.matrix(), expected, atol=1e-13)
    assert random_transform(rng).check()
