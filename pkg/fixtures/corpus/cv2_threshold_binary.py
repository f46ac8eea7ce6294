import os
import cv2
arr = cv2.imread(os.environ["ORIGINAL_IMAGE_PATH"])
gray = cv2.cvtColor(arr, cv2.COLOR_BGR2GRAY)
ret, th = cv2.threshold(gray, 127, 255, cv2.THRESH_BINARY)
