import os
import cv2
arr = cv2.imread(os.environ["ORIGINAL_IMAGE_PATH"])
out = cv2.rotate(arr, cv2.ROTATE_90_CLOCKWISE)
