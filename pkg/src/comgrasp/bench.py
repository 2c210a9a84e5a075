"""The simulated test bench: arm, cameras, noise preset and the measurement chain.

``measure_held`` runs the estimation pipeline on a rod hanging in the
gripper: side-camera observation, before/after torque capture at the lift
pose, gradient-descent solve and projection into the observed object frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import inverse_kinematics, lever_arms, self_gravity_torques
from .scene import CameraModel, GraspPose, ObjectTransform, RodObject, side_camera, top_down_camera
from .sceneio import SceneConfig
from .sensing import NoiseSpec, PayloadTruth, capture_after, capture_before
from .solver import ComEstimate, ObjectFrameCom, SolverConfig, project_to_object, solve_gd
from .vision import SLIP_DISTANCE, THETA_SLIP, SlipObservation, eelink_to_object, observe_side


@dataclass(frozen=True)
class Bench:
    scene: SceneConfig
    solver: SolverConfig = field(default_factory=SolverConfig)
    noise_sigma: float | None = None  # absolute override of the scene's noise preset
    theta_slip: float = THETA_SLIP
    slip_distance: float = SLIP_DISTANCE

    @property
    def chain(self):
        return self.scene.chain

    def top_camera(self) -> CameraModel:
        c = self.scene.top_camera
        return top_down_camera(c.center[0], c.center[1], self.scene.table_height + c.height, c.resolution, c.scale)

    def side_camera(self, grasp: GraspPose) -> CameraModel:
        c = self.scene.side_camera
        return side_camera(grasp.eelink_frame(self.scene.lift_height), c.resolution, c.scale)

    def lift_configuration(self, grasp: GraspPose) -> np.ndarray:
        return inverse_kinematics(self.chain, grasp.eelink_frame(self.scene.lift_height), self.scene.home)

    def noise_at(self, q, seed) -> NoiseSpec:
        if self.noise_sigma is not None:
            return NoiseSpec(self.noise_sigma, seed)
        if self.scene.noise_sigma is not None:
            return NoiseSpec(self.scene.noise_sigma, seed)
        tau = self_gravity_torques(self.chain, q, self.scene.gravity)
        return NoiseSpec(self.scene.noise_relative * float(np.abs(tau).max()), seed)

    def observe(self, held: RodObject, grasp: GraspPose, initial_contact_offset=None) -> SlipObservation:
        return observe_side(held, self.side_camera(grasp), initial_contact_offset,
                            self.theta_slip, self.slip_distance)


@dataclass(frozen=True)
class Measurement:
    observation: SlipObservation
    transform: ObjectTransform
    estimate: ComEstimate
    com: ObjectFrameCom  # along the observed rod axis (+x toward the eelink's +x)
    q: np.ndarray


def measure_held(bench: Bench, lifted: RodObject, grasp: GraspPose, seed) -> Measurement:
    """Estimate the CoM of ``lifted``, a rod hanging in the gripper at lift height.

    ``seed`` feeds the two torque noise draws.
    """
    q = bench.lift_configuration(grasp)
    obs = bench.observe(lifted, grasp)
    M = eelink_to_object(obs)

    E = grasp.eelink_frame(bench.scene.lift_height)
    truth = PayloadTruth(E.inverse().apply(lifted.com_world()), lifted.weight)
    s_before, s_after = np.random.SeedSequence(seed).spawn(2)
    g = bench.scene.gravity
    before = capture_before(bench.chain, q, bench.noise_at(q, s_before), g=g)
    after = capture_after(bench.chain, q, truth, bench.noise_at(q, s_after), g=g)
    est = solve_gd(before, after, lever_arms(bench.chain, q), bench.solver)
    return Measurement(obs, M, est, project_to_object(est, M, lifted.length), q)
